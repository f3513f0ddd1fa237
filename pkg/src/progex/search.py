"""Orderings of an explanation: the learned-reward argmax and two baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LatticeTooLarge
from .irl import trace_order
from .mdp import DEFAULT_LATTICE_LIMIT, ExplanationMdp, WeightVector, action_distance

PEG = "peg"
RANDOM = "random"
MANHATTAN = "manhattan"
CUSTOM = "custom"
METHODS = (PEG, RANDOM, MANHATTAN)

# rewards closer than this count as tied and fall back to change-id order
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OrderedExplanation:
    scenario_id: str
    steps: tuple
    total_reward: float
    method: str

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def ids(self) -> tuple:
        return tuple(c.id for c in self.steps)


def _ordered(mdp: ExplanationMdp, order, weights, method) -> OrderedExplanation:
    w = _array(weights, mdp)
    reward = float(mdp.trace_features(order) @ w)
    return OrderedExplanation(mdp.scenario_id, [mdp.changes[i] for i in order], reward, method)


def _array(weights, mdp) -> np.ndarray:
    if weights is None:
        return np.zeros(len(mdp.feature_names))
    if isinstance(weights, WeightVector):
        return weights.array
    return np.asarray(weights, dtype=float)


def best_to_go(mdp: ExplanationMdp, weights) -> tuple:
    """``best[mask]``: highest reward from ``mask`` to the goal."""
    rewards = mdp.rewards(_array(weights, mdp))
    best = np.zeros(1 << mdp.n)
    bits = 1 << np.arange(mdp.n)
    for masks in reversed(mdp.layers()[:-1]):
        best[masks] = np.max(rewards[masks] + best[masks[:, None] | bits[None, :]], axis=1)
    return best, rewards


def peg_order(mdp: ExplanationMdp, weights, limit: int = DEFAULT_LATTICE_LIMIT) -> OrderedExplanation:
    """Ordering with the highest total learned reward.

    Dynamic programming over the subset lattice; at each step the change
    with the lowest id among those within ``TIE_TOLERANCE`` of the best
    value is chosen.
    """
    if mdp.n > limit:
        raise LatticeTooLarge(f"explanation has {mdp.n} changes, limit is {limit}")
    best, rewards = best_to_go(mdp, weights)
    order = []
    mask = 0
    while mask != mdp.goal:
        values = [(rewards[mask, i] + best[mask | 1 << i], i)
                  for i in range(mdp.n) if mdp.enabled[mask, i]]
        top = max(v for v, _ in values)
        slack = TIE_TOLERANCE * max(1.0, abs(top))
        i = min(i for v, i in values if v >= top - slack)
        order.append(i)
        mask |= 1 << i
    return _ordered(mdp, order, weights, PEG)


def random_order(mdp: ExplanationMdp, seed, weights=None) -> OrderedExplanation:
    rng = np.random.default_rng(seed)
    order = [int(i) for i in rng.permutation(mdp.n)]
    return _ordered(mdp, order, weights, RANDOM)


def manhattan_order(mdp: ExplanationMdp, scenario, weights=None) -> OrderedExplanation:
    """Changes sorted by Manhattan distance of their cell from the start."""
    sx, sy = scenario.start

    def key(i):
        x, y = scenario.coordinates(mdp.changes[i].id)
        return (abs(x - sx) + abs(y - sy), mdp.changes[i].id)

    return _ordered(mdp, sorted(range(mdp.n), key=key), weights, MANHATTAN)


def custom_order(mdp: ExplanationMdp, ids, weights=None) -> OrderedExplanation:
    return _ordered(mdp, trace_order(ids, mdp), weights, CUSTOM)


@dataclass(frozen=True)
class ReplanningProfile:
    step_distances: tuple
    cumulative: tuple

    @property
    def total(self) -> float:
        return self.cumulative[-1] if self.cumulative else 0.0


def replanning_profile(order: OrderedExplanation, mdp: ExplanationMdp) -> ReplanningProfile:
    """Action distance between the explainee's optimal plans before and
    after each step, assuming they replan optimally every time."""
    indices = trace_order([c.id for c in order.steps], mdp)
    distances = []
    for mask, i in mdp.path(indices):
        distances.append(action_distance(mdp.states[mask].plan, mdp.states[mask | 1 << i].plan))
    return ReplanningProfile(tuple(distances), tuple(np.cumsum(distances).tolist()))
