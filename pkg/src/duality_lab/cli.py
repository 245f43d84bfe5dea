"""Command-line interface: ``duality-lab <command> ...`` (or ``python -m duality_lab``)."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

from .dsl import Workspace, _rel_text, parse_formula, parse_workspace
from .errors import DualityLabError, EnumerationTooLarge, ParseError
from .fixtures import buffer_fixture
from .lattice import format_subset
from .logic import check_derivation, eval_formula
from .modal import Frame, classify_sim, greatest_fixpoint
from .relations import FinRel, check_directionally_atomic, lower_lift, upper_lift
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class Report:
    """Collects a command's outcome for either text or JSON output."""

    def __init__(self, command: str, seed: int | None = None) -> None:
        self.command = command
        self.seed = seed
        self.verdict = "ok"
        self.witnesses: dict[str, Any] = {}
        self.lines: list[str] = []
        self.started = time.perf_counter()

    def say(self, line: str = "") -> None:
        self.lines.append(line)

    def as_json(self) -> str:
        return json.dumps({
            "command": self.command,
            "verdict": self.verdict,
            "witnesses": self.witnesses,
            "timings": {"total_s": round(time.perf_counter() - self.started, 6)},
            "seed": self.seed,
        }, sort_keys=True, default=str)


# ---------------------------------------------------------------------------
# helpers


def _load(path: str) -> Workspace:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_workspace(text)


def _relation(ws: Workspace, name: str) -> FinRel:
    if name not in ws.relations:
        raise UsageError(f"no relation named {name!r} (have: {', '.join(ws.relations) or 'none'})")
    return ws.relations[name]


def _frame(ws: Workspace, name: str) -> Frame:
    if name not in ws.frames:
        raise UsageError(f"no frame named {name!r} (have: {', '.join(ws.frames) or 'none'})")
    return ws.frames[name]


def _sim_report(ws: Workspace, rel_name: str, rep: Report, need_back: bool) -> int:
    q = _relation(ws, rel_name)
    X, Y = _frame(ws, q.src.name), _frame(ws, q.dst.name)
    sim = classify_sim(q, X, Y)
    rep.witnesses = sim.as_dict()
    ok = sim.is_bisimulation if need_back else sim.is_simulation
    what = "bisimulation" if need_back else "simulation"
    rep.verdict = "verified" if ok else "fails"
    rep.say(f"{rel_name}: {X.name} -> {Y.name}")
    rep.say(f"  simulation (forth):   {'yes' if sim.is_simulation else 'no'}")
    rep.say(f"  cosimulation (back):  {'yes' if sim.is_cosimulation else 'no'}")
    rep.say(f"  {what}: {'yes' if ok else 'no'}")
    for v in sim.counterexamples[:10]:
        rep.say(f"  counterexample: pair {v.pair} fails {v.side} via {v.transition[0]} -> {v.transition[1]}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args: argparse.Namespace, rep: Report) -> int:
    ws = _load(args.file)
    counts = {kind: len(getattr(ws, table)) for kind, table in Workspace._TABLES.items()}
    rep.witnesses = {"declarations": counts, "order": [f"{k} {n}" for k, n in ws.order]}
    rep.say(f"parsed {args.file}: " + ", ".join(f"{n} {k}" for k, n in counts.items() if n))
    for kind, name in ws.order:
        line, col = ws.positions[(kind, name)]
        rep.say(f"  {kind} {name} (line {line})")
    return EXIT_OK


def cmd_lift(args: argparse.Namespace, rep: Report) -> int:
    ws = _load(args.file)
    q = _relation(ws, args.rel)
    lifted = (upper_lift if args.upper else lower_lift)(q)
    try:
        M = lifted.matrix()
    except EnumerationTooLarge as exc:
        rep.verdict = "too_large"
        rep.witnesses = {"error": str(exc)}
        rep.say(f"EnumerationTooLarge: {exc}")
        return EXIT_FAIL
    table = {}
    for s in range(M.shape[0]):
        table[lifted.src.label(s)] = [lifted.dst.label(t) for t in range(M.shape[1]) if M[s, t]]
    rep.witnesses = {"kind": "upper" if args.upper else "lower", "table": table}
    rep.say(f"{'upper' if args.upper else 'lower'} lifting of {args.rel}: P({q.src.name}) -> P({q.dst.name})")
    for s, ts in table.items():
        rep.say(f"  {s} -> " + (" ".join(ts) if ts else "(nothing)"))
    return EXIT_OK


def cmd_check_rel(args: argparse.Namespace, rep: Report) -> int:
    ws = _load(args.file)
    q = _relation(ws, args.rel)
    lifted = (upper_lift if args.upper else lower_lift)(q).materialise()
    diag = check_directionally_atomic(lifted)
    rep.witnesses = diag.as_dict()
    rep.verdict = "verified" if diag.ok else "fails"
    rep.say(f"{'upper' if args.upper else 'lower'} lifting of {args.rel}:")
    for name, check in (("bimodule", diag.bimodule), ("left-disjunctive", diag.left_disjunctive),
                        ("atomic-founded", diag.atomic_founded)):
        rep.say(f"  {name}: {'yes' if check.holds else 'no, witness ' + repr(check.witness)}")
    rep.say(f"  directionally atomic: {'yes' if diag.ok else 'no'}")
    return EXIT_OK if diag.ok else EXIT_FAIL


def cmd_check_sim(args: argparse.Namespace, rep: Report) -> int:
    return _sim_report(_load(args.file), args.rel, rep, need_back=False)


def cmd_check_bisim(args: argparse.Namespace, rep: Report) -> int:
    return _sim_report(_load(args.file), args.rel, rep, need_back=True)


def cmd_greatest_bisim(args: argparse.Namespace, rep: Report) -> int:
    ws = _load(args.file)
    X, Y = _frame(ws, args.left), _frame(ws, args.right)
    g = greatest_fixpoint(args.kind, X, Y)
    rep.witnesses = {"kind": args.kind, "pairs": [list(p) for p in g.sorted_pairs()]}
    rep.verdict = "computed"
    for line in _rel_text(args.name, g):
        rep.say(line)
    return EXIT_OK


def cmd_verify_duality(args: argparse.Namespace, rep: Report) -> int:
    checks = run_suite(args.suite, max_size=args.max_size, seed=args.seed, samples=args.samples)
    ok = all(c.ok for c in checks)
    rep.verdict = "verified" if ok else "fails"
    rep.witnesses = {"suite": args.suite, "max_size": args.max_size, "samples": args.samples,
                     "checks": [c.as_dict() for c in checks]}
    rep.say(f"suite {args.suite} (max size {args.max_size}, seed {args.seed}, samples {args.samples})")
    for c in checks:
        rep.say(f"  [{'PASS' if c.ok else 'FAIL'}] {c.name}")
        if not c.ok:
            rep.say(f"         {json.dumps(c.detail, default=str)}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_eval(args: argparse.Namespace, rep: Report) -> int:
    ws = _load(args.file)
    if args.formula in ws.formulas and args.frame is None:
        decl = ws.formulas[args.formula]
        frame, phi = ws.frames[decl.frame], decl.formula
    else:
        if args.frame is None:
            raise UsageError(f"{args.formula!r} is not a declared formula; pass --frame to evaluate an expression")
        frame = _frame(ws, args.frame)
        phi = parse_formula(args.formula, frame, ws)
    worlds = sorted(eval_formula(phi, frame), key=frame.worlds.index.__getitem__)
    rep.verdict = "computed"
    rep.witnesses = {"frame": frame.name, "formula": str(phi), "worlds": worlds}
    rep.say(f"{phi} over {frame.name}: {format_subset(worlds)}")
    return EXIT_OK


def cmd_check_derivation(args: argparse.Namespace, rep: Report) -> int:
    ws = _load(args.file)
    if args.derivation not in ws.derivations:
        raise UsageError(f"no derivation named {args.derivation!r} (have: {', '.join(ws.derivations) or 'none'})")
    decl = ws.derivations[args.derivation]
    theory = ws.theories[decl.uses].theory if decl.uses else None
    result = check_derivation(decl.derivation, ws.models(), theory, assume=args.assume)
    rep.verdict = result.verdict
    rep.witnesses = result.as_dict()
    rep.say(f"derivation {args.derivation}: {result.verdict}")
    for f in result.failures:
        rep.say(f"  {f.kind} at {f.path}: {f.message}")
    for n in result.nodes:
        truth = {True: "true", False: "FALSE", None: "unknown"}[n.semantically_true]
        rep.say(f"  {n.path} [{n.rule}] {n.conclusion}  ({truth})")
    return EXIT_OK if result.accepted else EXIT_FAIL


def cmd_fixture(args: argparse.Namespace, rep: Report) -> int:
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    text = buffer_fixture(args.n).text()
    rep.verdict = "written"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        rep.witnesses = {"out": args.out, "n_max": args.n}
        rep.say(f"wrote buffer workspace (n_max = {args.n}) to {args.out}")
    else:
        rep.witnesses = {"n_max": args.n}
        rep.say(text.rstrip("\n"))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="emit a single JSON report object")
    parser = argparse.ArgumentParser(prog="duality-lab", description=__doc__)
    parser.add_argument("--json", action="store_true", help="emit a single JSON report object")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func: Callable[[argparse.Namespace, Report], int], help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(func=func)
        return p

    p = add("parse", cmd_parse, "parse a workspace file and list its declarations")
    p.add_argument("file")

    p = add("lift", cmd_lift, "print the lifted membership table of a relation")
    p.add_argument("file")
    p.add_argument("--rel", required=True)
    p.add_argument("--upper", action="store_true", help="use the upper lifting instead of the lower one")

    p = add("check-rel", cmd_check_rel, "directional-atomicity diagnostics for a lifted relation")
    p.add_argument("file")
    p.add_argument("--rel", required=True)
    p.add_argument("--upper", action="store_true", help="check the upper lifting instead")

    for name, func, what in (("check-sim", cmd_check_sim, "simulation"),
                             ("check-bisim", cmd_check_bisim, "bisimulation")):
        p = add(name, func, f"check whether a relation is a {what}")
        p.add_argument("file")
        p.add_argument("--rel", required=True)

    p = add("greatest-bisim", cmd_greatest_bisim, "compute the largest bisimulation between two frames")
    p.add_argument("file")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--kind", choices=("bisimulation", "simulation", "cosimulation"), default="bisimulation")
    p.add_argument("--name", default="G", help="name used when printing the relation")

    p = add("verify-duality", cmd_verify_duality, "run a bounded verification suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)

    p = add("eval", cmd_eval, "evaluate a formula to its set of worlds")
    p.add_argument("file")
    p.add_argument("--formula", required=True, help="a declared formula name or an expression (with --frame)")
    p.add_argument("--frame")

    p = add("check-derivation", cmd_check_derivation, "check a derivation from a workspace")
    p.add_argument("file")
    p.add_argument("--derivation", required=True)
    p.add_argument("--assume", action="store_true", help="trust theory facts instead of re-verifying them")

    p = add("fixture", cmd_fixture, "emit a ready-made workspace")
    p.add_argument("which", choices=("buffer",))
    p.add_argument("--n", type=int, default=3, help="largest buffered value")
    p.add_argument("--out")
    return parser


def run_cli(argv: Sequence[str] | None = None, out: Any = None, err: Any = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    seed = args.seed if args.command == "verify-duality" else None
    rep = Report(args.command, seed)
    try:
        code = args.func(args, rep)
    except (ParseError, UsageError) as exc:
        rep.verdict = "error"
        rep.witnesses = {"error": str(exc)}
        if isinstance(exc, ParseError):
            rep.witnesses.update(line=exc.line, column=exc.column, expected=sorted(exc.expected))
        rep.lines = [f"error: {exc}"]
        code = EXIT_USAGE
    except DualityLabError as exc:
        rep.verdict = "error"
        rep.witnesses = {"error": f"{type(exc).__name__}: {exc}"}
        rep.lines = [f"{type(exc).__name__}: {exc}"]
        code = EXIT_FAIL
    if args.json:
        print(rep.as_json(), file=out)
    else:
        stream = err if code == EXIT_USAGE else out
        for line in rep.lines:
            print(line, file=stream)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
