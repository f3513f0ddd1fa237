import itertools

import numpy as np
import pytest

from conftest import random_lattice
from oracles import central_difference, enumerated_visitation, ordering_distribution, trace_log_likelihood
from progex.errors import Diverged, InvalidTrace, LatticeTooLarge
from progex.irl import (
    MU1_SAMPLED,
    SYNTHETIC,
    Trace,
    TrainingConfig,
    irl_gradient,
    log_likelihood,
    log_partition,
    mpof,
    soft_policy,
    train,
    trace_distribution,
    trace_order,
    trace_reward,
)
from progex.mdp import WeightVector, lattice_from_features


def test_policy_rows_sum_to_one(rng):
    mdp = random_lattice(rng, 4)
    policy = soft_policy(rng.normal(size=6), mdp)
    sums = policy.sum(axis=1)
    np.testing.assert_allclose(sums[:-1], 1.0, atol=1e-12)
    assert sums[-1] == 0.0
    assert np.all(policy[~mdp.enabled] == 0)


def test_zero_weights_partition_is_log_factorial(rng):
    mdp = random_lattice(rng, 5)
    log_z, _ = log_partition(np.zeros(6), mdp)
    assert log_z[0] == pytest.approx(np.log(120))


def test_trace_distribution_matches_oracle(rng):
    mdp = random_lattice(rng, 4)
    w = rng.normal(size=6)
    ours = trace_distribution(w, mdp)
    oracle = ordering_distribution(mdp.features, w)
    for order, p in oracle.items():
        assert ours[tuple(mdp.ids[i] for i in order)] == pytest.approx(p, abs=1e-12)


def test_trace_distribution_refuses_large_lattices(rng):
    with pytest.raises(LatticeTooLarge):
        trace_distribution(np.zeros(6), random_lattice(rng, 9, k=6, scale=0.0))


def test_mpof_matches_enumeration(rng):
    mdp = random_lattice(rng, 4)
    w = rng.normal(size=6)
    np.testing.assert_allclose(mpof(soft_policy(w, mdp), mdp), enumerated_visitation(mdp.features, w), atol=1e-12)


def test_mpof_per_step_layers_sum_to_one(rng):
    mdp = random_lattice(rng, 4)
    freq, steps = mpof(soft_policy(rng.normal(size=6), mdp), mdp, per_step=True)
    assert len(steps) == 4
    for step in steps:
        assert step.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(sum(steps), freq)


def test_mpof_custom_first_step(rng):
    mdp = random_lattice(rng, 3)
    policy = soft_policy(np.zeros(6), mdp)
    freq = mpof(policy, mdp, mu1=[1.0, 0.0, 0.0])
    assert freq[0].tolist() == [1.0, 0.0, 0.0]
    assert freq[0b010].sum() == 0.0


def test_trace_validation():
    mdp = lattice_from_features(np.zeros((8, 3, 6)))
    assert trace_order(Trace("synthetic", "CAB"), mdp) == [2, 0, 1]
    with pytest.raises(InvalidTrace):
        trace_order(Trace("synthetic", "AB"), mdp)
    with pytest.raises(InvalidTrace):
        trace_order(Trace("synthetic", "AAB"), mdp)
    with pytest.raises(InvalidTrace):
        trace_order(Trace("synthetic", "ABZ"), mdp)


def test_trace_reward_sums_steps(rng):
    mdp = random_lattice(rng, 3)
    w = rng.normal(size=6)
    expected = mdp.features[0, 1] @ w + mdp.features[0b010, 2] @ w + mdp.features[0b110, 0] @ w
    assert trace_reward(w, Trace("synthetic", "BCA"), mdp) == pytest.approx(expected)


def _data(rng, sizes, per):
    mdps, groups, traces = {}, [], []
    for k, n in enumerate(sizes):
        mdp = lattice_from_features(rng.random((1 << n, n, 6)), scenario_id=f"m{k}")
        mdps[mdp.scenario_id] = mdp
        orders = [tuple(rng.permutation(n)) for _ in range(per)]
        groups.append((mdp.features, orders))
        traces += [Trace(mdp.scenario_id, [mdp.ids[i] for i in o]) for o in orders]
    return mdps, groups, traces


def test_log_likelihood_matches_oracle(rng):
    mdps, groups, traces = _data(rng, [3, 4], 5)
    w = rng.normal(size=6)
    assert log_likelihood(w, traces, mdps) == pytest.approx(trace_log_likelihood(groups, w), abs=1e-10)


def test_gradient_matches_finite_differences(rng):
    mdps, groups, traces = _data(rng, [2, 3, 4], 4)
    w = rng.normal(size=6)
    numeric = central_difference(lambda v: trace_log_likelihood(groups, v), w)
    np.testing.assert_allclose(irl_gradient(w, traces, mdps), numeric, rtol=1e-5, atol=1e-8)


def test_unknown_scenario_is_invalid(rng):
    mdps, _, _ = _data(rng, [3], 1)
    with pytest.raises(InvalidTrace):
        irl_gradient(np.zeros(6), [Trace("nowhere", "ABC")], mdps)


def test_training_increases_likelihood_and_is_deterministic(rng):
    mdps, _, traces = _data(rng, [3, 4], 10)
    config = TrainingConfig(learning_rate=0.5, iterations=50)
    result = train(traces, mdps, config)
    history = result.log_likelihood_history
    assert all(b >= a - 1e-9 for a, b in zip(history, history[1:]))
    assert history[-1] > history[0]
    assert train(traces, mdps, config).weights.values == result.weights.values
    assert result.weights.scenario_ids == ("m0", "m1")


def test_training_recovers_sign_of_dominant_weight():
    # one feature only; traces all follow the feature's argmax
    features = np.zeros((8, 3, 1))
    features[0, 0] = features[1, 1] = features[3, 2] = 1.0
    mdp = lattice_from_features(features, scenario_id="x")
    mdp.feature_names = ("f",)
    traces = [Trace("x", "ABC", SYNTHETIC)] * 20
    result = train(traces, {"x": mdp}, TrainingConfig(learning_rate=1.0, iterations=200))
    assert result.weights.values[0] > 2.0


def test_uniform_traces_give_near_zero_weights(rng):
    mdp = random_lattice(rng, 3)
    traces = [Trace(mdp.scenario_id, [mdp.ids[i] for i in o]) for o in itertools.permutations(range(3))]
    result = train(traces * 3, {mdp.scenario_id: mdp}, TrainingConfig(learning_rate=1.0, iterations=500))
    assert np.max(np.abs(result.weights.array)) < 0.05
    assert result.converged


def test_sampled_first_step_is_seeded(rng):
    mdps, _, traces = _data(rng, [3], 6)
    config = TrainingConfig(learning_rate=0.5, iterations=20, mu1=MU1_SAMPLED, sample_count=200, seed=3)
    assert train(traces, mdps, config).weights.values == train(traces, mdps, config).weights.values


def test_divergence_detected(monkeypatch, rng):
    mdps, _, traces = _data(rng, [3], 4)
    import progex.irl as irl

    # a gradient pointing downhill makes every step lower the likelihood
    real = irl._gradient
    monkeypatch.setattr(irl, "_gradient", lambda *a, **k: -real(*a, **k) - 1.0)
    with pytest.raises(Diverged):
        train(traces, mdps, TrainingConfig(learning_rate=1.0, iterations=100))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainingConfig(mu1="bogus")


def test_weights_keep_feature_names(rng):
    mdps, _, traces = _data(rng, [3], 3)
    result = train(traces, mdps, TrainingConfig(iterations=2))
    assert isinstance(result.weights, WeightVector)
    assert result.weights.names[-1] == "action_distance"
