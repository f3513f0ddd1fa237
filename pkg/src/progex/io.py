"""Plain-text file formats: scenarios, models, traces, weights, orderings.

Every ``emit_*`` has a matching ``parse_*`` with ``parse(emit(x)) == x``.
Floats are written with ``repr`` so they survive the round trip exactly.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import FormatError
from .escape_room import Scenario
from .irl import HUMAN, Trace
from .mdp import WeightVector
from .strips import Action, Model


def write_atomic(path, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), 1):
        yield number, raw.rstrip()


# -- scenarios ---------------------------------------------------------------

def emit_scenario(scenario: Scenario) -> str:
    lines = list(scenario.grid)
    lines.append("dangerous: " + " ".join(sorted(scenario.dangerous)))
    lines.append(f"id: {scenario.id}")
    return "\n".join(lines) + "\n"


def parse_scenario(text: str, default_id: str = "") -> Scenario:
    grid, dangerous, sid = [], None, default_id
    for number, line in _lines(text):
        if not line:
            continue
        if line.startswith("dangerous:"):
            dangerous = line.split(":", 1)[1].split()
        elif line.startswith("id:"):
            sid = line.split(":", 1)[1].strip()
        elif dangerous is None:
            grid.append(line)
        else:
            raise FormatError(f"line {number}: grid rows must precede 'dangerous:'")
    if dangerous is None:
        raise FormatError("missing 'dangerous:' line")
    if not sid:
        raise FormatError("missing 'id:' line")
    try:
        return Scenario(sid, grid, dangerous)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), default_id=path.stem)


def scenario_paths(inputs) -> list:
    """Expand directories into their ``*.txt`` files, sorted by name."""
    paths = []
    for item in inputs:
        item = Path(item)
        paths.extend(sorted(item.glob("*.txt")) if item.is_dir() else [item])
    return paths


def load_scenarios(inputs) -> dict:
    scenarios = {}
    for path in scenario_paths(inputs):
        scenario = load_scenario(path)
        if scenario.id in scenarios:
            raise FormatError(f"duplicate scenario id {scenario.id!r} in {path}")
        scenarios[scenario.id] = scenario
    return dict(sorted(scenarios.items()))


# -- models --------------------------------------------------------------------
#
#   predicates: a b c
#   init: a
#   goal: c
#   soft-penalty: 0
#   action NAME
#     pre: a (b)        parenthesized predicates are soft preconditions
#     add: c
#     del: a
#     cost: 1           defaults to 1; "none" means no cost feature

def emit_model(model: Model) -> str:
    lines = [
        "predicates: " + " ".join(sorted(model.predicates)),
        "init: " + " ".join(sorted(model.init)),
        "goal: " + " ".join(sorted(model.goal)),
        f"soft-penalty: {model.soft_penalty}",
    ]
    for action in model.actions:
        pre = sorted(action.preconditions) + [f"({p})" for p in sorted(action.soft_preconditions)]
        lines.append(f"action {action.name}")
        lines.append("  pre: " + " ".join(pre))
        lines.append("  add: " + " ".join(sorted(action.add_effects)))
        lines.append("  del: " + " ".join(sorted(action.del_effects)))
        lines.append(f"  cost: {'none' if action.cost is None else action.cost}")
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _tokens(value: str):
    # "(b c)" and "(b) (c)" both mark b and c as soft
    hard, soft, depth = [], [], 0
    for token in value.replace("(", " ( ").replace(")", " ) ").split():
        if token == "(":
            depth += 1
        elif token == ")":
            depth -= 1
            if depth < 0:
                raise FormatError("unbalanced parentheses")
        else:
            (soft if depth else hard).append(token)
    if depth:
        raise FormatError("unbalanced parentheses")
    return hard, soft


def parse_model(text: str) -> Model:
    header = {"predicates": [], "init": [], "goal": []}
    penalty = Fraction(0)
    actions = []
    current = None
    for number, line in _lines(text):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("action "):
            current = {"name": stripped.split(None, 1)[1], "pre": [], "soft": [],
                       "add": [], "del": [], "cost": Fraction(1)}
            actions.append(current)
            continue
        key, sep, value = stripped.partition(":")
        if not sep:
            raise FormatError(f"line {number}: expected 'key: value'")
        key = key.strip()
        try:
            if current is None:
                if key == "soft-penalty":
                    penalty = Fraction(value.strip())
                elif key in header:
                    header[key] = value.split()
                else:
                    raise FormatError(f"line {number}: unknown key {key!r}")
            elif key == "pre":
                current["pre"], current["soft"] = _tokens(value)
            elif key in ("add", "del"):
                current[key] = value.split()
            elif key == "cost":
                value = value.strip()
                current["cost"] = None if value == "none" else Fraction(value)
            else:
                raise FormatError(f"line {number}: unknown action key {key!r}")
        except ValueError as exc:
            raise FormatError(f"line {number}: {exc}") from None
    try:
        model = Model(
            header["predicates"],
            tuple(Action(a["name"], a["pre"], a["add"], a["del"], a["cost"], a["soft"]) for a in actions),
            header["init"],
            header["goal"],
            penalty,
        )
        model.validate()
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    return model


def load_model(path) -> Model:
    return parse_model(Path(path).read_text(encoding="utf-8"))


# -- traces --------------------------------------------------------------------

def emit_traces(traces) -> str:
    lines = []
    provenance = HUMAN
    for trace in traces:
        if trace.provenance != provenance:
            provenance = trace.provenance
            lines.append(f"# provenance: {provenance}")
        lines.append(f"{trace.scenario_id}: " + " ".join(trace.steps))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_traces(text: str, with_lines: bool = False):
    """Traces in file order; with ``with_lines`` also their line numbers."""
    traces, numbers = [], []
    provenance = HUMAN
    for number, line in _lines(text):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].partition(":")
            if key.strip() == "provenance":
                provenance = value.strip()
            continue
        sid, sep, steps = stripped.partition(":")
        if not sep or not sid.strip():
            raise FormatError(f"line {number}: expected 'scenario_id: A B C'")
        traces.append(Trace(sid.strip(), steps.split(), provenance))
        numbers.append(number)
    return (traces, numbers) if with_lines else traces


# -- weights -------------------------------------------------------------------

WEIGHTS_HEADER = "feature\traw\tnormalized"


def emit_weights(weights: WeightVector) -> str:
    lines = [
        f"# scenarios: {' '.join(weights.scenario_ids)}".rstrip(),
        f"# iterations: {weights.iterations}",
        WEIGHTS_HEADER,
    ]
    for name, raw, norm in zip(weights.names, weights.values, weights.normalized()):
        lines.append(f"{name}\t{raw!r}\t{norm!r}")
    return "\n".join(lines) + "\n"


def parse_weights(text: str) -> WeightVector:
    meta = {"scenarios": "", "iterations": "0"}
    names, values = [], []
    for number, line in _lines(text):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        if line == WEIGHTS_HEADER:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"line {number}: expected 'feature<TAB>raw<TAB>normalized'")
        try:
            values.append(float(parts[1]))
        except ValueError:
            raise FormatError(f"line {number}: bad weight {parts[1]!r}") from None
        names.append(parts[0])
    if not names:
        raise FormatError("weights file lists no features")
    return WeightVector(values, names, meta["scenarios"].split(), int(meta["iterations"]))


# -- orderings -----------------------------------------------------------------

ORDERING_HEADER = "step\tchange\trho\taction_distance"


@dataclass(frozen=True)
class OrderingRecord:
    scenario_id: str
    method: str
    changes: tuple
    rewards: tuple
    action_distances: tuple

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    @property
    def total_action_distance(self) -> float:
        return float(sum(self.action_distances))


def emit_ordering(record: OrderingRecord) -> str:
    lines = [
        f"# scenario: {record.scenario_id}",
        f"# method: {record.method}",
        ORDERING_HEADER,
    ]
    for step, (change, r, d) in enumerate(zip(record.changes, record.rewards, record.action_distances), 1):
        lines.append(f"{step}\t{change}\t{r!r}\t{d!r}")
    lines.append(f"# total_reward: {record.total_reward!r}")
    lines.append(f"# total_action_distance: {record.total_action_distance!r}")
    return "\n".join(lines) + "\n"


def parse_ordering(text: str) -> OrderingRecord:
    meta = {}
    changes, rewards, distances = [], [], []
    for number, line in _lines(text):
        if not line.strip() or line == ORDERING_HEADER:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        parts = line.split("\t")
        if len(parts) != 4 or parts[0] != str(len(changes) + 1):
            raise FormatError(f"line {number}: expected 'step<TAB>change<TAB>rho<TAB>action_distance'")
        changes.append(parts[1])
        rewards.append(float(parts[2]))
        distances.append(float(parts[3]))
    if "scenario" not in meta or "method" not in meta:
        raise FormatError("ordering file needs scenario and method headers")
    return OrderingRecord(meta["scenario"], meta["method"], tuple(changes), tuple(rewards), tuple(distances))
