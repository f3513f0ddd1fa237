"""Compare ordering methods with the replan-after-every-step oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .escape_room import DANGEROUS, scenario_mdp
from .search import MANHATTAN, PEG, RANDOM, manhattan_order, peg_order, random_order, replanning_profile


@dataclass
class MethodRun:
    scenario_id: str
    method: str
    draw: int
    order: object
    profile: object


@dataclass
class Evaluation:
    runs: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def totals(self, method: str) -> dict:
        """Scenario id -> cumulative action distance (mean over draws)."""
        per = {}
        for run in self.runs:
            if run.method == method:
                per.setdefault(run.scenario_id, []).append(run.profile.total)
        return {sid: float(np.mean(v)) for sid, v in sorted(per.items())}

    def mean_total(self, method: str) -> float:
        totals = self.totals(method)
        return float(np.mean(list(totals.values()))) if totals else float("nan")

    def compare(self, baseline: str, method: str = PEG) -> dict:
        ours, theirs = self.totals(method), self.totals(baseline)
        shared = sorted(set(ours) & set(theirs))
        diffs = np.array([ours[s] - theirs[s] for s in shared])
        return {
            "baseline": baseline,
            "scenarios": len(shared),
            "mean_method": float(np.mean([ours[s] for s in shared])) if shared else float("nan"),
            "mean_baseline": float(np.mean([theirs[s] for s in shared])) if shared else float("nan"),
            "mean_difference": float(diffs.mean()) if shared else float("nan"),
            "wins": int(np.sum(diffs < -1e-12)),
            "ties": int(np.sum(np.abs(diffs) <= 1e-12)),
            "losses": int(np.sum(diffs > 1e-12)),
        }


def evaluate(scenarios, weights, methods=(PEG, RANDOM, MANHATTAN), *, random_draws=50,
             seed=0, mode=DANGEROUS) -> Evaluation:
    """Order every scenario's explanation with each method and record the
    per-step action distances.  A scenario that fails is skipped and its
    error message kept in ``failures``."""
    result = Evaluation()
    for index, scenario in enumerate(scenarios):
        try:
            mdp = scenario_mdp(scenario, mode)
            runs = []
            for method in methods:
                if method == PEG:
                    orders = [peg_order(mdp, weights)]
                elif method == MANHATTAN:
                    orders = [manhattan_order(mdp, scenario, weights)]
                elif method == RANDOM:
                    orders = [random_order(mdp, (seed, index, d), weights) for d in range(random_draws)]
                else:
                    raise ValueError(f"unknown method {method!r}")
                for draw, order in enumerate(orders):
                    runs.append(MethodRun(scenario.id, method, draw, order, replanning_profile(order, mdp)))
        except Exception as exc:  # recorded per scenario, reported by the caller
            result.failures[scenario.id] = f"{type(exc).__name__}: {exc}"
            continue
        result.runs.extend(runs)
    return result
