"""Command-line interface.

Subcommands: ``simulate``, ``minimize``, ``verify-minimal``, ``gen-synthetic``.

``--granularity`` takes a comma-separated composition read right to left:
``--granularity queries,iterations`` first minimizes iterations, then
queries within the surviving iterations.

Exit codes: 0 success, 1 usage or input error, 2 the full trace does not
fail under the chosen oracle, 3 simulated crash (``simulate``), 4 budget
exhausted (``simulate``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional, Sequence

from .dataset import Dataset, DatasetError, UnknownExample, load_dataset_files
from .ddmin import EntryConditionViolated, ddebug_composed, verify_one_minimal
from .engine import Effect, EngineConfig, OutcomeKind, load_fault_spec, print_log, simulate
from .oracle import (
    CRASH_EXIT_CODE,
    CrashOracle,
    CrashOracleConfig,
    DiffOracle,
    DiffOracleConfig,
    Termination,
)
from .report import dump_stats, format_minimality, format_table, render_figure, stats_report
from .synthetic import BUG_SHAPES, PROFILES, generate
from .term import TermSyntaxError, print_term
from .trace import Granularity, Run, Slice, TraceError, load_trace, print_trace

log = logging.getLogger("tracedd")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENTRY = 2
EXIT_CRASH = CRASH_EXIT_CODE
EXIT_BUDGET = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means something else here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_schedule(text: str) -> List[Granularity]:
    """Comma list in composition order, returned in application order."""
    names = [n for n in text.split(",") if n.strip()]
    if not names:
        raise UsageError("empty granularity schedule")
    try:
        return [Granularity.parse(n) for n in reversed(names)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fail_on(text: str) -> frozenset:
    try:
        return frozenset(Termination(t.strip()) for t in text.split(",") if t.strip())
    except ValueError:
        choices = ", ".join(t.value for t in Termination)
        raise UsageError(f"--fail-on expects a comma list of: {choices}") from None


def _engine(args, with_fault: bool = True) -> EngineConfig:
    fault = load_fault_spec(args.fault_spec) if with_fault and args.fault_spec else None
    return EngineConfig(fault, args.step_budget, args.depth_budget)


def _dataset(args) -> Dataset:
    if not args.examples:
        raise UsageError("--examples is required")
    return load_dataset_files(args.examples, args.background)


def _build_oracle(args):
    if args.oracle == "diff":
        dataset = _dataset(args)
        if not args.fault_spec:
            log.warning("no --fault-spec: candidate engine equals the baseline, no slice can fail")
        cfg = DiffOracleConfig(_engine(args, False), _engine(args), dataset)
        return DiffOracle(cfg)
    if args.oracle == "crash":
        cfg = CrashOracleConfig(
            None, args.timeout, _fail_on(args.fail_on), dataset=_dataset(args), engine=_engine(args)
        )
        return CrashOracle(cfg)
    if not args.cmd:
        raise UsageError("--oracle cmd needs --cmd TEMPLATE")
    cfg = CrashOracleConfig(
        args.cmd,
        args.timeout,
        _fail_on(args.fail_on),
        dataset_path=os.path.abspath(args.examples) if args.examples else "",
        background_path=os.path.abspath(args.background) if args.background else "",
    )
    return CrashOracle(cfg)


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    trace = load_trace(args.trace)
    dataset = _dataset(args)
    report = simulate(trace, dataset, _engine(args))
    _write(args.out, print_log(report.log))
    if report.outcome.kind is OutcomeKind.CRASHED:
        print(f"simulated crash at {report.outcome}", file=sys.stderr)
        if args.abort_on_crash:
            sys.stderr.flush()
            sys.stdout.flush()
            os.abort()
        return EXIT_CRASH
    if report.outcome.kind is OutcomeKind.BUDGET_EXHAUSTED:
        print(f"evaluation budget exhausted at {report.outcome}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_minimize(args) -> int:
    schedule = parse_schedule(args.granularity)
    trace = load_trace(args.trace)
    oracle = _build_oracle(args)
    try:
        result, stats = ddebug_composed(trace, oracle, schedule, parallel=args.parallel)
    except EntryConditionViolated:
        print(
            f"error: the full trace does not reproduce the bug under the {args.oracle} oracle; "
            "nothing to minimize",
            file=sys.stderr,
        )
        return EXIT_ENTRY
    report = stats_report(schedule, stats, trace, result, args.oracle)
    _write(args.out, print_trace(result))
    if args.stats:
        _write(args.stats, dump_stats(report))
    if args.figure:
        render_figure(report, args.figure)
    # keep stdout clean when it carries the trace
    table_stream = sys.stderr if args.out in (None, "-") else sys.stdout
    table_stream.write(format_table(report))
    return EXIT_OK


def _describe_unit(u) -> str:
    if isinstance(u, Run):
        return f"run {u.uid} on example {print_term(u.example_id)}"
    return str(u)


def cmd_verify_minimal(args) -> int:
    schedule = parse_schedule(args.granularity)
    g = schedule[-1]
    trace = load_trace(args.trace)
    oracle = _build_oracle(args)
    s = Slice.full(trace, g)
    try:
        rep = verify_one_minimal(s, oracle, size_cap=args.cap)
    except EntryConditionViolated:
        print("error: the trace does not reproduce the bug; minimality is undefined", file=sys.stderr)
        return EXIT_ENTRY
    sys.stdout.write(f"granularity: {g.value}\n" + format_minimality(rep, len(s), _describe_unit))
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    effect = Effect(args.effect) if args.effect else None
    case = generate(
        args.iterations,
        args.queries,
        args.examples,
        args.shape,
        args.seed,
        total_queries=args.total_queries,
        effect=effect,
        profile=args.profile,
    )
    os.makedirs(args.out, exist_ok=True)
    for name, text in case.files().items():
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    it, qu, r = case.trace.counts()
    required = ", ".join(str(u) for u in case.required)
    print(f"wrote {args.out}: {it} iterations, {qu} queries, {r} runs; planted queries: {required}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_inputs(p: argparse.ArgumentParser, trace: bool = True) -> None:
    if trace:
        p.add_argument("--trace", required=True, help="trace file")
    p.add_argument("--examples", help="examples file (model blocks)")
    p.add_argument("--background", help="background knowledge file")
    p.add_argument("--fault-spec", help="fault planted in the candidate engine")
    p.add_argument("--step-budget", type=int, default=EngineConfig().step_budget)
    p.add_argument("--depth-budget", type=int, default=EngineConfig().depth_budget)


def _add_oracle(p: argparse.ArgumentParser) -> None:
    p.add_argument("--oracle", choices=("crash", "diff", "cmd"), default="diff")
    p.add_argument("--cmd", help="command template; {trace}, {dataset}, {background} are substituted")
    p.add_argument("--timeout", type=float, default=60.0, help="seconds per external test")
    p.add_argument(
        "--fail-on",
        default="signal,crash_exit",
        help="abnormal terminations counted as failure: signal, crash_exit, nonzero_exit, timeout",
    )
    p.add_argument("--granularity", default="queries", help="e.g. 'queries,iterations' (read right to left)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tracedd", description="Trace-based delta debugging of query engines.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a trace and write its success log")
    _add_inputs(p)
    p.add_argument("--out", help="log file (default: stdout)")
    p.add_argument("--abort-on-crash", action="store_true", help="die by SIGABRT on a simulated crash")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("minimize", help="delta-debug a failing trace")
    _add_inputs(p)
    _add_oracle(p)
    p.add_argument("--out", help="minimized trace (default: stdout)")
    p.add_argument("--stats", help="JSON stats report")
    p.add_argument("--figure", help="render a progress figure (PNG, PDF, SVG by extension)")
    p.add_argument("--parallel", type=int, default=0, help="test each round's candidates on N threads")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("verify-minimal", help="check that a trace is 1-minimal")
    _add_inputs(p)
    _add_oracle(p)
    p.add_argument("--cap", type=int, default=16, help="largest slice for the exhaustive global search")
    p.set_defaults(func=cmd_verify_minimal)

    p = sub.add_parser("gen-synthetic", help="generate a trace, dataset and planted fault")
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--queries", type=int, default=20, help="mean queries per iteration")
    p.add_argument("--total-queries", type=int, help="exact total, overrides --queries")
    p.add_argument("--examples", type=int, default=10)
    p.add_argument("--shape", choices=BUG_SHAPES, default="last")
    p.add_argument("--profile", choices=PROFILES, default="bulge")
    p.add_argument("--effect", choices=[e.value for e in Effect])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, TermSyntaxError, TraceError, DatasetError, UnknownExample, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
