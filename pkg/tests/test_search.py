import numpy as np
import pytest

from conftest import random_lattice
from oracles import best_ordering, ordering_reward
from progex.errors import LatticeTooLarge
from progex.escape_room import GROUND_TRUTH, Scenario, scenario_mdp
from progex.evaluation import evaluate
from progex.io import load_scenario
from progex.mdp import WeightVector, lattice_from_features
from progex.search import (
    MANHATTAN,
    PEG,
    RANDOM,
    custom_order,
    manhattan_order,
    peg_order,
    random_order,
    replanning_profile,
)


@pytest.fixture
def room(data_dir):
    return load_scenario(data_dir / "escape_room.txt")


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_peg_matches_brute_force(rng, n):
    for _ in range(5):
        mdp = random_lattice(rng, n)
        w = rng.normal(size=6)
        best, order = best_ordering(mdp.features, w)
        result = peg_order(mdp, w)
        assert result.total_reward == pytest.approx(best, abs=1e-9)
        assert result.ids == tuple(mdp.ids[i] for i in order)


def test_exact_ties_pick_lowest_id():
    mdp = lattice_from_features(np.zeros((8, 3, 6)))
    assert peg_order(mdp, np.ones(6)).ids == ("A", "B", "C")


def test_peg_limit(rng):
    with pytest.raises(LatticeTooLarge):
        peg_order(random_lattice(rng, 3), np.zeros(6), limit=2)


def test_random_order_is_seeded(room):
    mdp = scenario_mdp(room)
    assert random_order(mdp, 7).ids == random_order(mdp, 7).ids
    assert sorted(random_order(mdp, 7).ids) == list(mdp.ids)


def test_manhattan_order_ascends(room):
    mdp = scenario_mdp(room)
    order = manhattan_order(mdp, room)
    sx, sy = room.start
    distances = [abs(x - sx) + abs(y - sy) for x, y in map(room.coordinates, order.ids)]
    assert distances == sorted(distances)
    assert order.method == MANHATTAN


def test_single_change_scenario_gives_single_step():
    s = Scenario("one", ["S.A.", "...G"], ("A",))
    mdp = scenario_mdp(s)
    for order in (peg_order(mdp, GROUND_TRUTH), random_order(mdp, 0), manhattan_order(mdp, s)):
        assert order.ids == ("A",)


def test_custom_order_reward_matches_oracle(room):
    mdp = scenario_mdp(room)
    order = custom_order(mdp, ["H", "A", "D"], GROUND_TRUTH)
    expected = ordering_reward(mdp.features, GROUND_TRUTH.array, [2, 0, 1])
    assert order.total_reward == pytest.approx(expected)


def test_replanning_profile(room):
    mdp = scenario_mdp(room)
    order = custom_order(mdp, ["A", "D", "H"])
    profile = replanning_profile(order, mdp)
    assert len(profile.step_distances) == 3
    assert profile.total == pytest.approx(sum(profile.step_distances))
    assert profile.cumulative == tuple(np.cumsum(profile.step_distances))


def test_peg_with_ground_truth_minimizes_fixture_replanning(room):
    mdp = scenario_mdp(room)
    peg = replanning_profile(peg_order(mdp, GROUND_TRUTH), mdp).total
    for seed in range(10):
        assert peg <= replanning_profile(random_order(mdp, seed), mdp).total + 1e-12


def test_evaluate_reports_all_methods(small_scenarios):
    result = evaluate(small_scenarios[:3], GROUND_TRUTH, random_draws=4, seed=1)
    assert not result.failures
    for method in (PEG, RANDOM, MANHATTAN):
        assert len(result.totals(method)) == 3
    assert sum(r.method == RANDOM for r in result.runs) == 12
    comparison = result.compare(RANDOM)
    assert comparison["wins"] + comparison["ties"] + comparison["losses"] == 3


def test_evaluate_single_method_profile_length(room):
    result = evaluate([room], WeightVector.zeros(), (PEG,))
    (run,) = result.runs
    assert len(run.profile.step_distances) == 3


def test_evaluate_records_failures():
    blocked = Scenario("blocked", ["SAG"], ("A",))
    result = evaluate([blocked], GROUND_TRUTH, (PEG,))
    assert "blocked" in result.failures and not result.runs
