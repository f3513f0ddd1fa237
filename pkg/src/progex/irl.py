"""Maximum-entropy IRL over explanation lattices.

Trace probabilities are proportional to ``exp(sum of step rewards)`` over
all orderings of a scenario's explanation.  The partition function, the
stochastic policy and the expected step visitation are computed by dynamic
programming over the subset lattice, layer by layer, in log space.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import Diverged, InvalidTrace, LatticeTooLarge
from .mdp import ExplanationMdp, WeightVector

log = logging.getLogger(__name__)

HUMAN = "human"
SYNTHETIC = "synthetic"

MU1_EXACT = "exact"
MU1_SAMPLED = "sampled"

ENUMERATION_LIMIT = 8
DIVERGENCE_PATIENCE = 10


@dataclass(frozen=True)
class Trace:
    scenario_id: str
    steps: tuple
    provenance: str = HUMAN

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))


@dataclass
class TrainingConfig:
    learning_rate: float = 0.05
    iterations: int = 500
    convergence_tolerance: float = 1e-5
    sample_count: int = 1000
    seed: int = 0
    mu1: str = MU1_EXACT

    def __post_init__(self):
        if self.learning_rate <= 0 or self.convergence_tolerance <= 0:
            raise ValueError("learning rate and tolerance must be positive")
        if self.iterations < 1 or self.sample_count < 1:
            raise ValueError("iterations and sample_count must be positive")
        if self.mu1 not in (MU1_EXACT, MU1_SAMPLED):
            raise ValueError(f"mu1 must be {MU1_EXACT!r} or {MU1_SAMPLED!r}")


@dataclass
class IrlResult:
    weights: WeightVector
    log_likelihood_history: list = field(default_factory=list)
    gradient_norm_history: list = field(default_factory=list)
    converged: bool = False


def _weights(weights) -> np.ndarray:
    if isinstance(weights, WeightVector):
        return weights.array
    return np.asarray(weights, dtype=float)


def trace_order(trace, mdp: ExplanationMdp) -> list:
    """Change indices of ``trace``; raises :class:`InvalidTrace` unless the
    steps are a permutation of the explanation."""
    steps = trace.steps if isinstance(trace, Trace) else tuple(trace)
    try:
        order = mdp.indices(steps)
    except KeyError as exc:
        raise InvalidTrace(exc.args[0] if exc.args else str(exc)) from None
    if sorted(order) != list(range(mdp.n)):
        raise InvalidTrace(f"trace {' '.join(steps)} is not an ordering of {' '.join(mdp.ids)}")
    return order


def trace_reward(weights, trace, mdp: ExplanationMdp) -> float:
    order = trace_order(trace, mdp)
    return float(mdp.trace_features(order) @ _weights(weights))


def log_partition(weights, mdp: ExplanationMdp) -> tuple:
    """Return ``(log_z, rewards)``; ``log_z[mask]`` sums ``exp(reward)`` over
    every completion from ``mask`` to the goal."""
    rewards = mdp.rewards(_weights(weights))
    n = mdp.n
    log_z = np.zeros(1 << n)
    bits = 1 << np.arange(n)
    for masks in reversed(mdp.layers()[:-1]):
        q = rewards[masks] + log_z[masks[:, None] | bits[None, :]]
        log_z[masks] = logsumexp(q, axis=1)
    return log_z, rewards


def soft_policy(weights, mdp: ExplanationMdp) -> np.ndarray:
    """``policy[mask, i]``: probability of explaining change ``i`` next.

    Rows at the goal state are zero; every other row sums to one.
    """
    log_z, rewards = log_partition(weights, mdp)
    n = mdp.n
    bits = 1 << np.arange(n)
    masks = np.arange(1 << n)
    q = rewards + log_z[masks[:, None] | bits[None, :]] - log_z[:, None]
    policy = np.exp(q)
    policy[mdp.goal] = 0.0
    return policy


def trace_distribution(weights, mdp: ExplanationMdp) -> dict:
    """Explicit MaxEnt distribution over all orderings (small lattices only)."""
    if mdp.n > ENUMERATION_LIMIT:
        raise LatticeTooLarge(f"{mdp.n}! orderings exceed the enumeration limit")
    w = _weights(weights)
    orders = list(itertools.permutations(range(mdp.n)))
    scores = np.array([mdp.trace_features(o) @ w for o in orders])
    probs = np.exp(scores - logsumexp(scores))
    return {tuple(mdp.ids[i] for i in o): float(p) for o, p in zip(orders, probs)}


def mpof(policy: np.ndarray, mdp: ExplanationMdp, mu1=None, per_step=False):
    """Expected visitation of each transition ``(mask, i)``.

    ``mu1`` is the distribution of the first step (defaults to the policy's
    own first-step row).  Every state lies in exactly one layer, so summing
    the per-step frequencies leaves one entry per transition.  With
    ``per_step`` the list of per-step arrays is returned as well.
    """
    n = mdp.n
    visits = np.zeros(1 << n)
    freq = np.zeros((1 << n, n))
    steps = []
    if n == 0:
        return (freq, steps) if per_step else freq
    bits = 1 << np.arange(n)
    first = policy[0] if mu1 is None else np.asarray(mu1, dtype=float)
    for t, masks in enumerate(mdp.layers()[:-1]):
        if t == 0:
            mu = first[None, :]
        else:
            mu = visits[masks, None] * policy[masks]
        freq[masks] = mu
        for i in range(n):
            np.add.at(visits, masks | bits[i], mu[:, i] * mdp.enabled[masks, i])
        if per_step:
            step = np.zeros_like(freq)
            step[masks] = mu
            steps.append(step)
    return (freq, steps) if per_step else freq


def expected_features(policy, mdp: ExplanationMdp, mu1=None) -> np.ndarray:
    freq = mpof(policy, mdp, mu1)
    return np.einsum("mi,mik->k", freq, mdp.features)


def _group(traces, mdps) -> dict:
    groups = {}
    for trace in traces:
        if trace.scenario_id not in mdps:
            raise InvalidTrace(f"no lattice for scenario {trace.scenario_id!r}")
        groups.setdefault(trace.scenario_id, []).append(trace)
    return dict(sorted(groups.items()))


def _empirical(groups, mdps) -> dict:
    return {
        sid: (sum(mdps[sid].trace_features(trace_order(t, mdps[sid])) for t in ts), len(ts))
        for sid, ts in groups.items()
    }


def log_likelihood(weights, traces, mdps: dict) -> float:
    """Average log-probability of ``traces`` under the MaxEnt distribution."""
    traces = list(traces)
    groups = _group(traces, mdps)
    return _log_likelihood(_weights(weights), _empirical(groups, mdps), mdps, len(traces))


def _log_likelihood(w, empirical, mdps, total) -> float:
    value = 0.0
    for sid, (feats, count) in empirical.items():
        log_z, _ = log_partition(w, mdps[sid])
        value += float(feats @ w) - count * log_z[0]
    return float(value / total)


def _gradient(w, empirical, mdps, total, mu1_for=None) -> np.ndarray:
    grad = np.zeros_like(w)
    for sid, (feats, count) in empirical.items():
        mdp = mdps[sid]
        policy = soft_policy(w, mdp)
        mu1 = mu1_for(policy, mdp) if mu1_for else None
        grad += feats - count * expected_features(policy, mdp, mu1)
    return grad / total


def irl_gradient(weights, traces, mdps: dict) -> np.ndarray:
    """Empirical minus expected feature counts, averaged over the traces."""
    traces = list(traces)
    if not traces:
        raise InvalidTrace("no traces")
    groups = _group(traces, mdps)
    return _gradient(_weights(weights), _empirical(groups, mdps), mdps, len(traces))


def sample_order(policy: np.ndarray, mdp: ExplanationMdp, rng) -> list:
    order = []
    mask = 0
    for _ in range(mdp.n):
        i = int(rng.choice(mdp.n, p=policy[mask] / policy[mask].sum()))
        order.append(i)
        mask = mdp.step(mask, i)
    return order


def train(traces, mdps: dict, config: TrainingConfig | None = None) -> IrlResult:
    """Fit weights by gradient ascent on the trace log-likelihood.

    Starts from zero weights and takes fixed steps.  A step that lowers the
    likelihood is rejected and the step size halved; ten rejections in a row
    raise :class:`Diverged`.
    """
    config = config or TrainingConfig()
    traces = list(traces)
    if not traces:
        raise InvalidTrace("no traces")
    groups = _group(traces, mdps)
    empirical = _empirical(groups, mdps)
    names = next(iter(mdps[s] for s in groups)).feature_names
    total = len(traces)
    rng = np.random.default_rng(config.seed)

    def sampled_mu1(policy, mdp):
        if mdp.n == 0:
            return np.zeros(0)
        draws = rng.choice(mdp.n, size=config.sample_count, p=policy[0] / policy[0].sum())
        return np.bincount(draws, minlength=mdp.n) / config.sample_count

    mu1_for = sampled_mu1 if config.mu1 == MU1_SAMPLED else None

    w = np.zeros(len(names))
    ll = _log_likelihood(w, empirical, mdps, total)
    lr = config.learning_rate
    result = IrlResult(WeightVector(w, names))
    rejected = 0
    accepted = 0
    grad = None
    for iteration in range(config.iterations):
        if grad is None:
            grad = _gradient(w, empirical, mdps, total, mu1_for)
            norm = float(np.max(np.abs(grad))) if grad.size else 0.0
            result.log_likelihood_history.append(ll)
            result.gradient_norm_history.append(norm)
            log.debug("iteration %d log-likelihood %.12g gradient %.3g", iteration, ll, norm)
            if norm < config.convergence_tolerance:
                result.converged = True
                break
        candidate = w + lr * grad
        candidate_ll = _log_likelihood(candidate, empirical, mdps, total)
        if not np.isfinite(candidate_ll) or candidate_ll < ll - 1e-9:
            rejected += 1
            lr *= 0.5
            if rejected >= DIVERGENCE_PATIENCE:
                raise Diverged(f"log-likelihood fell {rejected} times in a row at iteration {iteration}")
            continue
        rejected = 0
        accepted += 1
        w, ll, grad = candidate, candidate_ll, None

    if grad is None and not result.converged:
        grad = _gradient(w, empirical, mdps, total, mu1_for)
        norm = float(np.max(np.abs(grad))) if grad.size else 0.0
        result.log_likelihood_history.append(ll)
        result.gradient_norm_history.append(norm)
        result.converged = norm < config.convergence_tolerance
    result.weights = WeightVector(w, names, scenario_ids=tuple(groups), iterations=accepted)
    return result
