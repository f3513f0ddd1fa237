"""Escape-room mazes: grids with marked contingency cells.

A scenario is compiled into two planning models over the same maze.  The
explainee's model treats every non-wall cell as traversable; the robot's
model knows which marked cells are dangerous.  Revealing a danger removes
the ``clear`` fact of that cell from the explainee's initial state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GenerationExhausted, UnknownContingency, UnsolvableScenario, Unsolvable
from .mdp import ExplanationMdp, WeightVector, build_mdp
from .planner import optimal_plan
from .reconciliation import ReconciliationProblem, minimally_complete_explanation
from .strips import ADD, INIT_HAS, REMOVE, Action, FeatureChange, Model, ModelFeature

WALL, FREE, START, GOAL = "#", ".", "S", "G"
LETTERS = tuple(c for c in "ABCDEFHIJKLMNOPQRTUVWXYZ")
MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))

DANGEROUS = "delta"
MARKED = "marked"
MCE = "mce"
EXPLANATION_MODES = (DANGEROUS, MARKED, MCE)

# Synthetic explainee used to generate traces: replanning effort dominates,
# spatial jumps matter a little and unequal spatial weights avoid exact ties.
GROUND_TRUTH = WeightVector.from_mapping({
    "x_min": -2.0, "y_min": -2.5, "x_max": -3.0, "y_max": -3.5,
    "cost_distance_sq": -1.0, "action_distance": -8.0,
})


def at(cell) -> str:
    return f"at-{cell[0]}-{cell[1]}"


def clear(cell) -> str:
    return f"clear-{cell[0]}-{cell[1]}"


def safe(cell) -> str:
    return f"safe-{cell[0]}-{cell[1]}"


@dataclass(frozen=True)
class Scenario:
    """A maze given as rows of characters; ``(x, y)`` is (column, row)."""

    id: str
    grid: tuple
    dangerous: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "dangerous", frozenset(self.dangerous))
        if not self.grid or len({len(row) for row in self.grid}) != 1:
            raise ValueError("grid must be a non-empty rectangle")
        counts = {}
        for row in self.grid:
            for ch in row:
                if ch not in (WALL, FREE, START, GOAL) and ch not in LETTERS:
                    raise ValueError(f"unexpected grid character {ch!r}")
                counts[ch] = counts.get(ch, 0) + 1
        if counts.get(START) != 1 or counts.get(GOAL) != 1:
            raise ValueError("grid needs exactly one S and one G")
        repeated = [ch for ch in LETTERS if counts.get(ch, 0) > 1]
        if repeated:
            raise ValueError(f"marked letters repeated: {repeated}")
        missing = self.dangerous - set(self.contingencies)
        if missing:
            raise ValueError(f"dangerous letters not on grid: {sorted(missing)}")

    @property
    def width(self) -> int:
        return len(self.grid[0])

    @property
    def height(self) -> int:
        return len(self.grid)

    @cached_property
    def cells(self) -> dict:
        return {(x, y): ch for y, row in enumerate(self.grid) for x, ch in enumerate(row)}

    @cached_property
    def start(self) -> tuple:
        return next(c for c, ch in self.cells.items() if ch == START)

    @cached_property
    def goal(self) -> tuple:
        return next(c for c, ch in self.cells.items() if ch == GOAL)

    @cached_property
    def contingencies(self) -> dict:
        """Letter -> ``((x, y), dangerous)``."""
        return {ch: (c, ch in self.dangerous)
                for c, ch in sorted(self.cells.items(), key=lambda kv: kv[1]) if ch in LETTERS}

    @property
    def letters(self) -> tuple:
        return tuple(sorted(self.contingencies))

    @property
    def free_cells(self) -> int:
        return sum(ch != WALL for ch in self.cells.values())

    def coordinates(self, letter: str) -> tuple:
        try:
            return self.contingencies[letter][0]
        except KeyError:
            raise UnknownContingency(f"{letter!r} is not a marked cell of {self.id}") from None

    def passable(self, blocked=()) -> set:
        blocked = set(blocked)
        return {c for c, ch in self.cells.items() if ch != WALL and c not in blocked}

    def danger_cells(self) -> set:
        return {self.coordinates(ch) for ch in self.dangerous}


def shortest_path(passable, start, goal):
    """Breadth-first shortest cell path, or ``None``."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == goal:
            path = []
            while cell is not None:
                path.append(cell)
                cell = parent[cell]
            return path[::-1]
        for dx, dy in MOVES:
            nxt = (cell[0] + dx, cell[1] + dy)
            if nxt in passable and nxt not in parent:
                parent[nxt] = cell
                queue.append(nxt)
    return None


@dataclass(frozen=True)
class CompiledPair:
    scenario: Scenario
    robot_model: Model
    human_model: Model
    change_catalog: dict = field(compare=False)
    problem: ReconciliationProblem = field(compare=False, repr=False)

    @property
    def robot_plan(self):
        return self.problem.robot_plan

    def danger_changes(self) -> tuple:
        return tuple(self.change_catalog[ch] for ch in sorted(self.scenario.dangerous))

    def explanation(self, mode: str = DANGEROUS) -> tuple:
        """Changes to order: the dangerous contingencies (default), every
        marked cell, or a minimally complete explanation."""
        if mode == DANGEROUS:
            return self.danger_changes()
        if mode == MARKED:
            return tuple(self.change_catalog[ch] for ch in self.scenario.letters)
        if mode == MCE:
            return minimally_complete_explanation(self.problem, candidates=self.danger_changes()).changes
        raise ValueError(f"unknown explanation mode {mode!r}")


def _maze_model(scenario: Scenario, clear_cells) -> Model:
    cells = scenario.passable()
    marked = [c for c, _ in scenario.contingencies.values()]
    predicates = {at(c) for c in cells} | {clear(c) for c in cells} | {safe(c) for c in marked}
    actions = []
    for (x, y) in cells:
        for dx, dy in MOVES:
            nxt = (x + dx, y + dy)
            if nxt in cells:
                actions.append(Action(
                    f"move-{x}-{y}-{nxt[0]}-{nxt[1]}",
                    preconditions={at((x, y)), clear(nxt)},
                    add_effects={at(nxt)},
                    del_effects={at((x, y))},
                    cost=1,
                ))
    init = {at(scenario.start)} | {clear(c) for c in clear_cells}
    return Model(predicates, tuple(actions), init, {at(scenario.goal)})


def compile_scenario(scenario: Scenario) -> CompiledPair:
    """Build the robot/explainee model pair and the per-letter change catalog.

    Raises :class:`UnsolvableScenario` if the robot cannot reach the goal.
    """
    cells = scenario.passable()
    human = _maze_model(scenario, cells)
    robot = _maze_model(scenario, cells - scenario.danger_cells())
    catalog = {}
    for letter, (cell, dangerous) in scenario.contingencies.items():
        if dangerous:
            catalog[letter] = FeatureChange(REMOVE, ModelFeature(INIT_HAS, (clear(cell),)), letter)
        else:
            catalog[letter] = FeatureChange(ADD, ModelFeature(INIT_HAS, (safe(cell),)), letter)
    try:
        plan = optimal_plan(robot)
    except Unsolvable:
        raise UnsolvableScenario(f"scenario {scenario.id} has no safe path") from None
    return CompiledPair(scenario, robot, human, catalog, ReconciliationProblem(robot, human, plan))


def scenario_mdp(scenario: Scenario, mode: str = DANGEROUS, **kwargs) -> ExplanationMdp:
    pair = compile_scenario(scenario)
    return build_mdp(pair.problem, pair.explanation(mode), scenario, **kwargs)


def _random_grid(rng, width, height, wall_density):
    walls = rng.random((height, width)) < wall_density
    free = [(x, y) for y in range(height) for x in range(width) if not walls[y, x]]
    if len(free) < 2:
        return None
    a, b = rng.choice(len(free), size=2, replace=False)
    start, goal = free[a], free[b]
    if abs(start[0] - goal[0]) + abs(start[1] - goal[1]) < (width + height) // 2:
        return None
    if shortest_path(set(free), start, goal) is None:
        return None
    return walls, start, goal


def _place_contingencies(rng, free, start, goal, count):
    """Pick ``count`` cells: about two thirds chained along successive
    replans (so revealing them reshapes the route) and the rest at random."""
    chosen = []
    blocked = set()
    chain = math.ceil(2 * count / 3)
    while len(chosen) < chain:
        path = shortest_path(free - blocked, start, goal)
        inner = [c for c in path[1:-1] if c not in chosen] if path else []
        if not inner:
            break
        cell = inner[rng.integers(len(inner))]
        chosen.append(cell)
        blocked.add(cell)
    rest = sorted(free - set(chosen) - {start, goal})
    if len(rest) < count - len(chosen):
        return None
    for idx in rng.choice(len(rest), size=count - len(chosen), replace=False):
        chosen.append(rest[idx])
    return chosen


def generate_scenarios(count: int, grid_size=(9, 9), contingency_count: int = 7,
                       danger_probability: float = 0.5, seed: int = 0, *,
                       wall_density: float = 0.25, max_attempts: int = 1000,
                       prefix: str = "s") -> list:
    """Sample solvable escape-room scenarios.

    Every scenario's robot maze (all dangers blocked) has a path, so every
    partially explained maze has one too.  Raises
    :class:`GenerationExhausted` when ``max_attempts`` draws for a single
    scenario all fail.
    """
    width, height = grid_size
    if count < 0 or width < 2 or height < 2 or contingency_count < 0:
        raise ValueError("count, grid size and contingency count must be positive")
    if contingency_count > len(LETTERS):
        raise ValueError(f"at most {len(LETTERS)} contingencies fit the letter alphabet")
    if not 0 <= danger_probability <= 1:
        raise ValueError("danger_probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    scenarios = []
    for index in range(count):
        for _ in range(max_attempts):
            drawn = _random_grid(rng, width, height, wall_density)
            if drawn is None:
                continue
            walls, start, goal = drawn
            free = {(x, y) for y in range(height) for x in range(width) if not walls[y, x]}
            cells = _place_contingencies(rng, free, start, goal, contingency_count)
            if cells is None or len(cells) < contingency_count:
                continue
            letters = [LETTERS[i] for i in rng.permutation(contingency_count)]
            dangerous = {ch for ch in letters if rng.random() < danger_probability}
            danger_cells = {cell for cell, ch in zip(cells, letters) if ch in dangerous}
            if shortest_path(free - danger_cells, start, goal) is None:
                continue
            rows = [[WALL if walls[y, x] else FREE for x in range(width)] for y in range(height)]
            rows[start[1]][start[0]] = START
            rows[goal[1]][goal[0]] = GOAL
            for cell, ch in zip(cells, letters):
                rows[cell[1]][cell[0]] = ch
            scenarios.append(Scenario(f"{prefix}{index:03d}", ["".join(r) for r in rows], dangerous))
            break
        else:
            raise GenerationExhausted(f"no valid scenario after {max_attempts} attempts")
    return scenarios


def synthesize_traces(mdps, ground_truth, traces_per_scenario: int, seed: int = 0) -> list:
    """Sample orderings from the MaxEnt distribution under ``ground_truth``.

    ``mdps`` maps scenario id to its lattice; scenarios are visited in id
    order so a seed fixes the whole trace set.
    """
    from .irl import SYNTHETIC, Trace, sample_order, soft_policy

    rng = np.random.default_rng(seed)
    traces = []
    for sid in sorted(mdps):
        mdp = mdps[sid]
        policy = soft_policy(ground_truth, mdp)
        for _ in range(traces_per_scenario):
            order = sample_order(policy, mdp, rng)
            traces.append(Trace(sid, [mdp.ids[i] for i in order], SYNTHETIC))
    return traces
