"""Command-line pipeline: generate, trace-gen, train, explain, evaluate, mce, report.

Exit codes: 0 success, 2 usage, 3 domain or limit failure, 4 invalid data.
Every command writes its artifacts atomically plus a JSON manifest listing
them with their sha256.  Artifacts depend only on the flags and the seed;
the manifest additionally records wall-clock timestamps.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import (
    Diverged,
    FormatError,
    GenerationExhausted,
    InvalidTrace,
    LatticeTooLarge,
    LengthMismatch,
    NoCompleteExplanation,
    PlanNotOptimal,
    UnknownContingency,
    UnsolvableScenario,
)
from .escape_room import (
    EXPLANATION_MODES,
    DANGEROUS,
    GROUND_TRUTH,
    compile_scenario,
    generate_scenarios,
    scenario_mdp,
    synthesize_traces,
)
from .evaluation import evaluate
from .io import (
    OrderingRecord,
    emit_ordering,
    emit_scenario,
    emit_traces,
    emit_weights,
    load_model,
    load_scenario,
    load_scenarios,
    parse_traces,
    parse_weights,
    sha256,
    write_atomic,
)
from .irl import MU1_EXACT, MU1_SAMPLED, TrainingConfig, train, trace_order
from .mdp import WeightVector
from .planner import Plan, execute, optimal_plan
from .reconciliation import ReconciliationProblem, gap, minimally_complete_explanation
from .search import METHODS, PEG, RANDOM, manhattan_order, peg_order, random_order, replanning_profile

log = logging.getLogger("progex")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_DATA = 0, 2, 3, 4
SEED_ENV = "PROGEX_SEED"

DOMAIN_ERRORS = (Diverged, LatticeTooLarge, GenerationExhausted, UnsolvableScenario, NoCompleteExplanation)
DATA_ERRORS = (InvalidTrace, FormatError, PlanNotOptimal, UnknownContingency, LengthMismatch)


class CommandFailed(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# -- manifest ------------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_manifest(path, command, args, artifacts, started) -> Path:
    """Record the run next to its artifacts; paths are relative to ``path``."""
    path = Path(path)
    config = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    entries = []
    for artifact in artifacts:
        artifact = Path(artifact)
        entries.append({
            "path": os.path.relpath(artifact, path.parent),
            "sha256": sha256(artifact),
        })
    manifest = {
        "tool": "progex",
        "version": __version__,
        "command": command,
        "seed": getattr(args, "seed", None),
        "config": config,
        "artifacts": entries,
        "started_at": started,
        "finished_at": _now(),
    }
    return write_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


# -- flag parsing ----------------------------------------------------------------

def _grid(text: str) -> tuple:
    try:
        parts = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 9x9, got {text!r}") from None
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or min(parts) < 2:
        raise argparse.ArgumentTypeError(f"grid must look like 9x9, got {text!r}")
    return tuple(parts)


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return value


def _methods(text: str) -> tuple:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(METHODS)}")
    return methods


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CommandFailed(f"{SEED_ENV} must be an integer, got {raw!r}", EXIT_USAGE) from None


def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="progex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        return p

    def seed(p):
        p.add_argument("--seed", type=int, default=default_seed,
                       help=f"random seed (default from ${SEED_ENV}, else 0)")

    def explain_set(p):
        p.add_argument("--explain-set", choices=EXPLANATION_MODES, default=DANGEROUS,
                       help="changes to order: dangerous cells, all marked cells, or an MCE")

    p = command("generate", cmd_generate, "sample escape-room scenarios")
    p.add_argument("--count", type=_non_negative, required=True)
    p.add_argument("--grid", type=_grid, default=(9, 9), help="WxH, e.g. 9x9")
    p.add_argument("--contingencies", type=_non_negative, default=7)
    p.add_argument("--danger-prob", type=_probability, default=0.5)
    p.add_argument("--wall-density", type=_probability, default=0.25)
    p.add_argument("--prefix", default="s", help="scenario id prefix")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    seed(p)

    p = command("trace-gen", cmd_trace_gen, "sample synthetic explanation traces")
    p.add_argument("--scenarios", type=Path, nargs="+", required=True, help="scenario files or directories")
    p.add_argument("--weights", type=Path, help="ground-truth weights file (default: built-in)")
    p.add_argument("--per-scenario", type=_positive, default=40)
    p.add_argument("--out", type=Path, required=True)
    explain_set(p)
    seed(p)

    p = command("train", cmd_train, "learn reward weights from traces")
    p.add_argument("--traces", type=Path, required=True)
    p.add_argument("--scenarios", type=Path, nargs="+", required=True)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--iterations", type=_positive, default=3000)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--samples", type=_positive, default=1000, help="draws for a sampled first-step distribution")
    p.add_argument("--mu1", choices=(MU1_EXACT, MU1_SAMPLED), default=MU1_EXACT)
    p.add_argument("--out", type=Path, required=True, help="weights file")
    p.add_argument("--log", type=Path, help="training log (default: OUT.log)")
    explain_set(p)
    seed(p)

    p = command("explain", cmd_explain, "order one scenario's explanation")
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--weights", type=Path, help="required for --method peg")
    p.add_argument("--method", choices=METHODS, default=PEG)
    p.add_argument("--out", type=Path, required=True)
    explain_set(p)
    seed(p)

    p = command("evaluate", cmd_evaluate, "compare ordering methods over a scenario suite")
    p.add_argument("--scenarios", type=Path, nargs="+", required=True)
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--methods", type=_methods, default=METHODS, help="comma-separated, default all")
    p.add_argument("--random-draws", type=_positive, default=50)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    explain_set(p)
    seed(p)

    p = command("mce", cmd_mce, "minimally complete explanation of a model pair")
    p.add_argument("--scenario", type=Path)
    p.add_argument("--robot-model", type=Path)
    p.add_argument("--human-model", type=Path)
    p.add_argument("--robot-plan", type=Path, help="one action per line (default: an optimal robot plan)")
    p.add_argument("--limit", type=_positive, default=16)
    p.add_argument("--out", type=Path, required=True)

    p = command("report", cmd_report, "summarize an evaluate output directory")
    p.add_argument("--evaluation", type=Path, required=True)
    p.add_argument("--out", type=Path, help="default: EVALUATION/report.txt")
    return parser


# -- commands ------------------------------------------------------------------

def cmd_generate(args) -> tuple:
    scenarios = generate_scenarios(
        args.count, args.grid, args.contingencies, args.danger_prob, args.seed,
        wall_density=args.wall_density, prefix=args.prefix,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    written = [write_atomic(args.out / f"{s.id}.txt", emit_scenario(s)) for s in scenarios]
    log.info("wrote %d scenarios to %s", len(written), args.out)
    return written, args.out / "manifest.json"


def _mdps(scenarios: dict, mode) -> dict:
    return {sid: scenario_mdp(s, mode) for sid, s in scenarios.items()}


def _load_weights(path) -> WeightVector:
    return parse_weights(Path(path).read_text(encoding="utf-8"))


def cmd_trace_gen(args) -> tuple:
    scenarios = load_scenarios(args.scenarios)
    weights = _load_weights(args.weights) if args.weights else GROUND_TRUTH
    traces = synthesize_traces(_mdps(scenarios, args.explain_set), weights, args.per_scenario, args.seed)
    out = write_atomic(args.out, emit_traces(traces))
    log.info("wrote %d traces to %s", len(traces), out)
    return [out], _sidecar(args.out)


def cmd_train(args) -> tuple:
    scenarios = load_scenarios(args.scenarios)
    traces, lines = parse_traces(args.traces.read_text(encoding="utf-8"), with_lines=True)
    if not traces:
        raise InvalidTrace(f"{args.traces}: no traces")
    needed = {t.scenario_id for t in traces}
    missing = sorted(needed - set(scenarios))
    if missing:
        line = lines[[t.scenario_id for t in traces].index(missing[0])]
        raise InvalidTrace(f"{args.traces}:{line}: unknown scenario {missing[0]!r}")
    mdps = _mdps({sid: scenarios[sid] for sid in sorted(needed)}, args.explain_set)
    for trace, line in zip(traces, lines):
        try:
            trace_order(trace, mdps[trace.scenario_id])
        except InvalidTrace as exc:
            raise InvalidTrace(f"{args.traces}:{line}: {exc}") from None
    config = TrainingConfig(args.lr, args.iterations, args.tol, args.samples, args.seed, args.mu1)
    result = train(traces, mdps, config)
    weights = write_atomic(args.out, emit_weights(result.weights))
    rows = ["iteration\tlog_likelihood\tgradient_norm"]
    for i, (ll, g) in enumerate(zip(result.log_likelihood_history, result.gradient_norm_history)):
        rows.append(f"{i}\t{ll!r}\t{g!r}")
    rows.append(f"# converged: {str(result.converged).lower()}")
    log_path = write_atomic(args.log or args.out.with_name(args.out.name + ".log"), "\n".join(rows) + "\n")
    log.info("trained on %d traces, converged=%s", len(traces), result.converged)
    return [weights, log_path], _sidecar(args.out)


def _ordering(mdp, scenario, method, weights, seed):
    if method == PEG:
        return peg_order(mdp, weights)
    if method == RANDOM:
        return random_order(mdp, seed, weights)
    return manhattan_order(mdp, scenario, weights)


def cmd_explain(args) -> tuple:
    if args.method == PEG and args.weights is None:
        raise CommandFailed("--method peg needs --weights", EXIT_USAGE)
    scenario = load_scenario(args.scenario)
    weights = _load_weights(args.weights) if args.weights else WeightVector.zeros()
    mdp = scenario_mdp(scenario, args.explain_set)
    order = _ordering(mdp, scenario, args.method, weights, args.seed)
    indices = trace_order(order.ids, mdp)
    rewards = tuple(float(mdp.features[m, i] @ weights.array) for m, i in mdp.path(indices))
    profile = replanning_profile(order, mdp)
    record = OrderingRecord(scenario.id, args.method, order.ids, rewards, profile.step_distances)
    out = write_atomic(args.out, emit_ordering(record))
    return [out], _sidecar(args.out)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def cmd_evaluate(args) -> tuple:
    scenarios = load_scenarios(args.scenarios)
    weights = _load_weights(args.weights)
    result = evaluate(scenarios.values(), weights, args.methods,
                      random_draws=args.random_draws, seed=args.seed, mode=args.explain_set)
    args.out.mkdir(parents=True, exist_ok=True)

    profile = ["scenario\tmethod\tdraw\tstep\tchange\taction_distance\tcumulative"]
    for run in result.runs:
        steps = zip(run.order.ids, run.profile.step_distances, run.profile.cumulative)
        for step, (change, d, c) in enumerate(steps, 1):
            profile.append(f"{run.scenario_id}\t{run.method}\t{run.draw}\t{step}\t{change}\t{_fmt(d)}\t{_fmt(c)}")

    summary = ["scenario\tmethod\tcumulative_total"]
    for method in args.methods:
        for sid, total in result.totals(method).items():
            summary.append(f"{sid}\t{method}\t{_fmt(total)}")
    for sid, message in sorted(result.failures.items()):
        summary.append(f"{sid}\tFAILED\t{message}")
    for method in args.methods:
        summary.append(f"MEAN\t{method}\t{_fmt(result.mean_total(method))}")

    comparisons = ["method\tbaseline\tscenarios\tmean_method\tmean_baseline\tmean_difference\twins\tties\tlosses"]
    for baseline in args.methods:
        if baseline == PEG or PEG not in args.methods:
            continue
        c = result.compare(baseline)
        comparisons.append("\t".join([
            PEG, baseline, str(c["scenarios"]), _fmt(c["mean_method"]), _fmt(c["mean_baseline"]),
            _fmt(c["mean_difference"]), str(c["wins"]), str(c["ties"]), str(c["losses"]),
        ]))

    written = [
        write_atomic(args.out / "profiles.tsv", "\n".join(profile) + "\n"),
        write_atomic(args.out / "summary.tsv", "\n".join(summary) + "\n"),
        write_atomic(args.out / "comparisons.tsv", "\n".join(comparisons) + "\n"),
    ]
    manifest = args.out / "manifest.json"
    if result.failures:
        return written, manifest, CommandFailed(
            f"{len(result.failures)} scenario(s) failed: {', '.join(sorted(result.failures))}", EXIT_DOMAIN)
    return written, manifest


def _read_plan(path, model) -> Plan:
    steps = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()
             if line.strip() and not line.lstrip().startswith("#")]
    cost = execute(steps, model)
    if cost == float("inf"):
        raise PlanNotOptimal(f"{path}: plan does not reach the goal in the robot model")
    return Plan(steps, cost)


def cmd_mce(args) -> tuple:
    if args.scenario and (args.robot_model or args.human_model):
        raise CommandFailed("give --scenario or --robot-model/--human-model, not both", EXIT_USAGE)
    if args.scenario:
        pair = compile_scenario(load_scenario(args.scenario))
        robot, human, plan = pair.robot_model, pair.human_model, pair.robot_plan
        candidates = pair.danger_changes()
    elif args.robot_model and args.human_model:
        robot, human = load_model(args.robot_model), load_model(args.human_model)
        plan = _read_plan(args.robot_plan, robot) if args.robot_plan else optimal_plan(robot)
        candidates = None
    else:
        raise CommandFailed("need --scenario or both --robot-model and --human-model", EXIT_USAGE)
    problem = ReconciliationProblem(robot, human, plan)
    if not problem.robot_plan_is_optimal():
        raise PlanNotOptimal("the robot plan is not optimal in the robot model")
    explanation = minimally_complete_explanation(problem, args.limit, candidates)
    lines = [
        f"# robot_plan: {' '.join(plan.steps)}",
        f"# before_gap: {gap(problem)}",
        f"# after_gap: {gap(problem, explanation.changes)}",
        f"# size: {len(explanation)}",
        *explanation.ids,
    ]
    out = write_atomic(args.out, "\n".join(lines) + "\n")
    return [out], _sidecar(args.out)


def _read_tsv(path) -> list:
    rows = [line.split("\t") for line in Path(path).read_text(encoding="utf-8").splitlines() if line]
    return rows[1:]


def cmd_report(args) -> tuple:
    directory = args.evaluation
    try:
        summary = _read_tsv(directory / "summary.tsv")
        comparisons = _read_tsv(directory / "comparisons.tsv")
    except FileNotFoundError as exc:
        raise FormatError(f"not an evaluation directory: {exc.filename}") from None
    lines = ["Cumulative action distance (lower means less replanning)", ""]
    means = [r for r in summary if r[0] == "MEAN"]
    width = max((len(r[1]) for r in means), default=6)
    for _, method, value in means:
        lines.append(f"  {method:<{width}}  {float(value):10.4f}")
    failed = [r for r in summary if r[1] == "FAILED"]
    scenarios = sorted({r[0] for r in summary if r[0] != "MEAN" and r[1] != "FAILED"})
    lines += ["", f"scenarios: {len(scenarios)}", f"failures: {len(failed)}"]
    for r in failed:
        lines.append(f"  {r[0]}: {r[2]}")
    if comparisons:
        lines.append("")
    for r in comparisons:
        lines.append(f"{r[0]} vs {r[1]}: mean difference {float(r[5]):+.4f} "
                     f"(wins {r[6]}, ties {r[7]}, losses {r[8]})")
    text = "\n".join(lines) + "\n"
    out = write_atomic(args.out or directory / "report.txt", text)
    sys.stdout.write(text)
    return [out], _sidecar(out)


# -- entry point -----------------------------------------------------------------

def main(argv=None) -> int:
    try:
        parser = build_parser(_default_seed())
    except CommandFailed as exc:
        print(f"progex: error: {exc}", file=sys.stderr)
        return exc.code
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    started = _now()
    try:
        outcome = args.func(args)
    except CommandFailed as exc:
        print(f"progex: error: {exc}", file=sys.stderr)
        return exc.code
    except DOMAIN_ERRORS as exc:
        print(f"progex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DATA_ERRORS as exc:
        print(f"progex: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"progex: error: cannot read {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"progex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    artifacts, manifest = outcome[0], outcome[1]
    write_manifest(manifest, args.command, args, artifacts, started)
    if len(outcome) > 2:
        print(f"progex: error: {outcome[2]}", file=sys.stderr)
        return outcome[2].code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
