"""Optimal planning by uniform-cost search over grounded states.

Predicates that no action adds or deletes are static: they are folded into
action filtering once, and the search runs over the remaining fluents only.
Among equal-cost frontier nodes the search expands in lexicographic order
of (sorted fluent atoms, action name), so plans are reproducible.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import Unsolvable
from .strips import Model

OPTIMAL = "optimal"
VALID_SUBOPTIMAL = "valid-suboptimal"
INVALID = "invalid"
UNSOLVABLE = "unsolvable"

INF = math.inf


@dataclass(frozen=True)
class Plan:
    steps: tuple = ()
    total_cost: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "total_cost", Fraction(self.total_cost))

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def action_set(self) -> frozenset:
        return frozenset(self.steps)


@dataclass(frozen=True)
class PlanOutcome:
    status: str
    cost: Fraction | float

    @property
    def solvable(self) -> bool:
        return self.cost != INF


def step_cost(action, model: Model, state) -> Fraction:
    cost = action.cost if action.cost is not None else Fraction(0)
    if model.soft_penalty and action.soft_preconditions:
        cost += model.soft_penalty * len(action.soft_preconditions - state)
    return cost


@dataclass(frozen=True)
class _Grounding:
    fluents: frozenset
    # (name, static_pre, fluent_pre, add, delete, action)
    operators: tuple


@lru_cache(maxsize=64)
def _ground(actions: tuple) -> _Grounding:
    fluents = set()
    for a in actions:
        fluents |= a.add_effects | a.del_effects
    operators = []
    for a in actions:
        operators.append((
            a.name,
            a.preconditions - fluents,
            a.preconditions & fluents,
            a.add_effects,
            a.del_effects,
            a,
        ))
    return _Grounding(frozenset(fluents), tuple(operators))


def optimal_plan(model: Model) -> Plan:
    """Return a minimum-cost plan from ``model.init`` to ``model.goal``.

    Raises :class:`Unsolvable` when the goal is unreachable.
    """
    grounding = _ground(model.actions)
    fluents = grounding.fluents
    static_true = model.init - fluents
    goal_fluents = model.goal & fluents
    if not (model.goal - fluents) <= static_true:
        raise Unsolvable("goal requires a static predicate that is false")

    # index each usable operator by one fluent precondition
    by_trigger: dict = {}
    unconditional = []
    for name, static_pre, fluent_pre, add, delete, action in grounding.operators:
        if not static_pre <= static_true:
            continue
        op = (name, fluent_pre, add, delete, action)
        if fluent_pre:
            by_trigger.setdefault(min(fluent_pre), []).append(op)
        else:
            unconditional.append(op)

    start = model.init & fluents
    counter = itertools.count()
    frontier = [(Fraction(0), tuple(sorted(start)), "", next(counter), start, None)]
    parents = {}
    closed = set()
    while frontier:
        g, key, via, _, state, parent = heapq.heappop(frontier)
        if state in closed:
            continue
        closed.add(state)
        parents[state] = (parent, via)
        if goal_fluents <= state:
            return Plan(_unwind(parents, state), g)
        candidates = list(unconditional)
        for atom in state:
            candidates.extend(by_trigger.get(atom, ()))
        full = state | static_true if model.soft_penalty else state
        for name, fluent_pre, add, delete, action in candidates:
            if not fluent_pre <= state:
                continue
            succ = (state - delete) | add
            if succ in closed:
                continue
            cost = g + step_cost(action, model, full)
            heapq.heappush(frontier, (cost, tuple(sorted(succ)), name, next(counter), succ, state))
    raise Unsolvable("goal unreachable from initial state")


def _unwind(parents: dict, state) -> list:
    steps = []
    while True:
        parent, via = parents[state]
        if parent is None:
            return steps[::-1]
        steps.append(via)
        state = parent


def optimal_cost(model: Model):
    """Optimal plan cost, or ``math.inf`` if the model is unsolvable."""
    try:
        return optimal_plan(model).total_cost
    except Unsolvable:
        return INF


def execute(steps, model: Model):
    """Cost of running ``steps`` from ``model.init``; ``math.inf`` if some
    step is unknown or inapplicable, or the goal does not hold at the end."""
    state = model.init
    total = Fraction(0)
    for name in steps:
        action = model.action_map.get(name)
        if action is None or not action.preconditions <= state:
            return INF
        total += step_cost(action, model, state)
        state = (state - action.del_effects) | action.add_effects
    if not model.goal <= state:
        return INF
    return total


def plan_cost_in(plan: Plan, model: Model) -> PlanOutcome:
    cost = execute(plan.steps, model)
    if cost == INF:
        if optimal_cost(model) == INF:
            return PlanOutcome(UNSOLVABLE, INF)
        return PlanOutcome(INVALID, INF)
    status = OPTIMAL if cost == optimal_cost(model) else VALID_SUBOPTIMAL
    return PlanOutcome(status, cost)


def optimality_gap(plan: Plan, model: Model):
    """``cost(plan, model) - cost*(model)``, infinite when the plan fails."""
    cost = execute(plan.steps, model)
    if cost == INF:
        return INF
    return cost - optimal_cost(model)
