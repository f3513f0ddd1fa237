"""Explanation validity, completeness and minimally complete explanations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import NoCompleteExplanation, LatticeTooLarge
from .planner import INF, Plan, optimal_plan, optimality_gap
from .strips import Model, apply_changes, delta, gamma

DEFAULT_MCE_LIMIT = 16


@dataclass(frozen=True)
class ReconciliationProblem:
    robot_model: Model
    human_model: Model
    robot_plan: Plan

    @classmethod
    def from_models(cls, robot_model: Model, human_model: Model) -> ReconciliationProblem:
        return cls(robot_model, human_model, optimal_plan(robot_model))

    def delta(self) -> tuple:
        """Changes taking the human model to the robot model."""
        return delta(self.robot_model, self.human_model)

    def robot_plan_is_optimal(self) -> bool:
        return optimality_gap(self.robot_plan, self.robot_model) == 0


@dataclass(frozen=True)
class ExplanationSet:
    changes: tuple
    complete: bool

    @property
    def ids(self) -> tuple:
        return tuple(c.id for c in self.changes)

    def __len__(self) -> int:
        return len(self.changes)


def _gap_after(problem: ReconciliationProblem, changes):
    model = apply_changes(problem.human_model, changes)
    return model, optimality_gap(problem.robot_plan, model)


def is_valid_explanation(problem: ReconciliationProblem, changes) -> bool:
    changes = tuple(changes)
    model, gap = _gap_after(problem, changes)
    added = gamma(model) - gamma(problem.human_model)
    if not added <= gamma(problem.robot_model):
        return False
    before = optimality_gap(problem.robot_plan, problem.human_model)
    # inf < inf is False, matching "equal infinities compare equal"
    return gap < before


def is_complete(problem: ReconciliationProblem, changes) -> bool:
    _, gap = _gap_after(problem, tuple(changes))
    return gap == 0


def minimally_complete_explanation(
    problem: ReconciliationProblem, limit: int = DEFAULT_MCE_LIMIT, candidates=None
) -> ExplanationSet:
    """Smallest complete subset of the human-to-robot delta.

    Subsets are tried by increasing size, each size in lexicographic order of
    sorted change ids, so the first hit is the lexicographically least MCE.
    ``candidates`` restricts the search to a subset of the delta.
    """
    pool = tuple(sorted(candidates if candidates is not None else problem.delta(), key=lambda c: c.id))
    if len(pool) > limit:
        raise LatticeTooLarge(f"delta has {len(pool)} changes, limit is {limit}")
    for size in range(len(pool) + 1):
        for subset in itertools.combinations(pool, size):
            if is_complete(problem, subset):
                return ExplanationSet(subset, True)
    raise NoCompleteExplanation("no subset of the delta makes the robot plan optimal")


def gap(problem: ReconciliationProblem, changes=()) -> float:
    _, value = _gap_after(problem, tuple(changes))
    return float(value) if value != INF else INF
