"""The goal-based MDP over partially explained human models.

States are subsets of an explanation (stored as bitmasks over the changes
sorted by id); an action applies one not-yet-applied change; the single
goal state has every change applied.  Each transition carries a feature
vector describing how much the step disturbs the explainee's plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LatticeTooLarge, LengthMismatch, Unsolvable
from .planner import INF, Plan, optimal_plan
from .strips import REMOVE, FeatureChange, ModelFeature, apply_change

FEATURE_NAMES = ("x_min", "y_min", "x_max", "y_max", "cost_distance_sq", "action_distance")
DEFAULT_LATTICE_LIMIT = 14


@dataclass
class WeightVector:
    values: tuple
    names: tuple = FEATURE_NAMES
    scenario_ids: tuple = ()
    iterations: int = 0

    def __post_init__(self):
        self.values = tuple(float(v) for v in self.values)
        self.names = tuple(self.names)
        self.scenario_ids = tuple(self.scenario_ids)
        if len(self.values) != len(self.names):
            raise LengthMismatch(f"{len(self.values)} weights for {len(self.names)} features")

    @classmethod
    def zeros(cls, names=FEATURE_NAMES) -> WeightVector:
        return cls((0.0,) * len(names), names)

    @classmethod
    def from_mapping(cls, mapping: dict, names=FEATURE_NAMES) -> WeightVector:
        unknown = set(mapping) - set(names)
        if unknown:
            raise KeyError(f"unknown features {sorted(unknown)}")
        return cls(tuple(mapping.get(n, 0.0) for n in names), names)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def normalized(self) -> tuple:
        """Weights divided by their largest magnitude (all zero stays zero)."""
        scale = max((abs(v) for v in self.values), default=0.0)
        if scale == 0:
            return tuple(0.0 for _ in self.values)
        return tuple(v / scale for v in self.values)

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]


@dataclass(frozen=True)
class LatticeState:
    mask: int
    applied: frozenset
    model: object = field(compare=False, repr=False)
    plan: Plan | None = field(compare=False)

    @property
    def solvable(self) -> bool:
        return self.plan is not None

    @property
    def cost(self):
        return self.plan.total_cost if self.plan is not None else INF


def action_distance(p1, p2) -> float:
    """Jaccard distance between the action sets of two plans.

    ``None`` stands for an unsolvable model and counts as the empty plan;
    two empty plans are at distance 0.
    """
    a = _action_set(p1)
    b = _action_set(p2)
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def _action_set(plan) -> frozenset:
    if plan is None:
        return frozenset()
    if isinstance(plan, Plan):
        return plan.action_set
    return frozenset(plan)


def cost_distance_sq(cost1, cost2, normalizer=1.0) -> float:
    diff = float(cost1) - float(cost2)
    return diff * diff / float(normalizer)


def spatial_overshoot(explained, cell, start, width: int, height: int) -> tuple:
    """How far ``cell`` lies outside the bounding box of ``explained`` cells.

    Returns ``(x_min, y_min, x_max, y_max)``, each clamped at 0 and divided
    by the grid width or height.  An empty ``explained`` uses ``start``.
    """
    points = list(explained) or [start]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x, y = cell
    return (
        max(0, min(xs) - x) / width,
        max(0, min(ys) - y) / height,
        max(0, x - max(xs)) / width,
        max(0, y - max(ys)) / height,
    )


def spatial_features(state: LatticeState, change, scenario) -> tuple:
    coords = [scenario.coordinates(i) for i in sorted(state.applied)]
    return spatial_overshoot(coords, scenario.coordinates(change.id), scenario.start,
                             scenario.width, scenario.height)


def rho(weights, features) -> float:
    w = weights.array if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    f = np.asarray(features, dtype=float)
    if w.shape != f.shape:
        raise LengthMismatch(f"weights {w.shape} vs features {f.shape}")
    return float(w @ f)


class ExplanationMdp:
    """Enumerated subset lattice with cached models, plans and features.

    ``features[mask, i]`` is the feature vector for applying change ``i`` in
    state ``mask``; entries for already-applied changes are zero and
    ``enabled[mask, i]`` is False there.  Features already include the
    per-step discount, so rewards are plain inner products.
    """

    def __init__(self, changes, states, features, discount=1.0, scenario_id="",
                 feature_names=FEATURE_NAMES, cost_normalizer=1.0):
        self.changes = tuple(changes)
        self.states = tuple(states)
        self.features = features
        self.discount = discount
        self.scenario_id = scenario_id
        self.feature_names = tuple(feature_names)
        self.cost_normalizer = cost_normalizer
        n = self.n
        masks = np.arange(1 << n)
        self.enabled = ((masks[:, None] >> np.arange(n)[None, :]) & 1) == 0
        self.popcount = np.array([bin(m).count("1") for m in range(1 << n)])
        self._index = {c.id: i for i, c in enumerate(self.changes)}

    @property
    def n(self) -> int:
        return len(self.changes)

    @property
    def goal(self) -> int:
        return (1 << self.n) - 1

    @property
    def ids(self) -> tuple:
        return tuple(c.id for c in self.changes)

    def layers(self) -> list:
        """Masks grouped by number of applied changes."""
        return [np.flatnonzero(self.popcount == k) for k in range(self.n + 1)]

    def transitions(self):
        for mask in range(1 << self.n):
            for i in range(self.n):
                if self.enabled[mask, i]:
                    yield mask, i, mask | (1 << i)

    def step(self, mask: int, i: int) -> int:
        """Next state; the goal state absorbs every action."""
        if mask == self.goal:
            return mask
        if not self.enabled[mask, i]:
            raise ValueError(f"change {self.changes[i].id} already applied")
        return mask | (1 << i)

    def index(self, change_id: str) -> int:
        try:
            return self._index[change_id]
        except KeyError:
            raise KeyError(f"change {change_id!r} not in explanation for {self.scenario_id!r}") from None

    def indices(self, ids) -> list:
        return [self.index(i) for i in ids]

    def path(self, order) -> list:
        """``(mask, i)`` pairs visited by an ordering of change indices."""
        pairs = []
        mask = 0
        for i in order:
            pairs.append((mask, i))
            mask = self.step(mask, i)
        return pairs

    def trace_features(self, order) -> np.ndarray:
        total = np.zeros(len(self.feature_names))
        for mask, i in self.path(order):
            total += self.features[mask, i]
        return total

    def rewards(self, weights) -> np.ndarray:
        """Per-transition rewards, ``-inf`` where the change is not enabled."""
        w = weights.array if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
        if w.shape[0] != self.features.shape[2]:
            raise LengthMismatch(f"{w.shape[0]} weights for {self.features.shape[2]} features")
        r = self.features @ w
        return np.where(self.enabled, r, -np.inf)


def build_mdp(problem, explanation, scenario=None, *, limit=DEFAULT_LATTICE_LIMIT,
              discount=1.0, cost_normalizer=None, scenario_id="") -> ExplanationMdp:
    """Enumerate the lattice over ``explanation`` starting at the human model.

    ``scenario`` supplies grid coordinates for the spatial features; without
    it those entries are zero.
    """
    changes = tuple(sorted(getattr(explanation, "changes", explanation), key=lambda c: c.id))
    n = len(changes)
    if n > limit:
        raise LatticeTooLarge(f"explanation has {n} changes, limit is {limit}")
    if not 0 < discount <= 1:
        raise ValueError("discount must lie in (0, 1]")

    states = []
    for mask in range(1 << n):
        if mask == 0:
            model = problem.human_model
        else:
            low = mask.bit_length() - 1
            model = apply_change(states[mask & ~(1 << low)].model, changes[low])
        try:
            plan = optimal_plan(model)
        except Unsolvable:
            plan = None
        applied = frozenset(changes[i].id for i in range(n) if mask >> i & 1)
        states.append(LatticeState(mask, applied, model, plan))

    solvable_costs = [float(s.cost) for s in states if s.solvable]
    top = max(solvable_costs, default=0.0)
    if scenario is not None:
        traversal = scenario.free_cells
    else:
        traversal = max(1.0, top)
    surrogate = top + traversal
    costs = [float(s.cost) if s.solvable else surrogate for s in states]

    if cost_normalizer is None:
        diffs = [(costs[m] - costs[m | 1 << i]) ** 2
                 for m in range(1 << n) for i in range(n) if not m >> i & 1]
        cost_normalizer = max(diffs, default=0.0) or 1.0

    k = len(FEATURE_NAMES)
    features = np.zeros((1 << n, n, k))
    for mask in range(1 << n):
        scale = discount ** bin(mask).count("1")
        state = states[mask]
        for i in range(n):
            if mask >> i & 1:
                continue
            nxt = states[mask | 1 << i]
            vec = np.zeros(k)
            if scenario is not None:
                vec[:4] = spatial_features(state, changes[i], scenario)
            vec[4] = cost_distance_sq(costs[mask], costs[mask | 1 << i], cost_normalizer)
            vec[5] = action_distance(state.plan, nxt.plan)
            features[mask, i] = scale * vec

    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite transition features")
    return ExplanationMdp(changes, states, features, discount=discount,
                          scenario_id=scenario_id or getattr(scenario, "id", ""),
                          cost_normalizer=cost_normalizer)


def lattice_from_features(features, ids=None, scenario_id="synthetic") -> ExplanationMdp:
    """Wrap a raw ``(2**n, n, k)`` feature array as an MDP without models.

    Useful for exercising the learning code on arbitrary reward structure.
    """
    features = np.asarray(features, dtype=float)
    n = features.shape[1]
    if features.shape[0] != 1 << n:
        raise ValueError("first axis must have 2**n entries")
    ids = ids or [chr(ord("A") + i) for i in range(n)]
    changes = [FeatureChange(REMOVE, ModelFeature("init-has", (f"p{i}",)), name)
               for i, name in enumerate(ids)]
    states = [LatticeState(m, frozenset(ids[i] for i in range(n) if m >> i & 1), None, None)
              for m in range(1 << n)]
    masks = np.arange(1 << n)
    enabled = ((masks[:, None] >> np.arange(n)[None, :]) & 1) == 0
    features = features * enabled[:, :, None]
    names = FEATURE_NAMES if features.shape[2] == len(FEATURE_NAMES) else tuple(
        f"f{j}" for j in range(features.shape[2]))
    return ExplanationMdp(changes, states, features, scenario_id=scenario_id, feature_names=names)
