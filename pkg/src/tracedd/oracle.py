"""Test functions that decide whether a slice still reproduces a bug.

Two families:

* crash oracles: run the slice and watch for abnormal termination, either
  in-process (simulated crash outcome) or by launching an external command
  on a temporary trace file;
* the differential oracle: simulate the slice under a trusted baseline and
  a candidate engine and compare per-run success logs.
"""

from __future__ import annotations

import enum
import logging
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple

from .dataset import Dataset, UnknownExample
from .ddmin import TestOutcome
from .engine import EngineConfig, OutcomeKind, ResultMemo, SuccessLog, simulate
from .trace import Run, Slice, Trace, print_trace

__all__ = [
    "Termination",
    "CrashOracleConfig",
    "DiffOracleConfig",
    "CrashOracle",
    "DiffOracle",
    "crash_test",
    "diff_test",
    "locate_divergence",
    "CRASH_EXIT_CODE",
]

log = logging.getLogger(__name__)

CRASH_EXIT_CODE = 3


class Termination(enum.Enum):
    """Abnormal-termination classes a crash oracle can count as failure."""

    SIGNAL = "signal"  # killed by a signal (segfault, abort, ...)
    CRASH_EXIT = "crash_exit"  # the simulator's dedicated crash exit code
    NONZERO_EXIT = "nonzero_exit"  # any nonzero exit status
    TIMEOUT = "timeout"  # hung past the timeout


DEFAULT_FAIL_ON = frozenset({Termination.SIGNAL, Termination.CRASH_EXIT})


@dataclass(frozen=True)
class CrashOracleConfig:
    """``engine_command`` is a template; ``{trace}`` is replaced by a
    temporary trace file, ``{dataset}`` and ``{background}`` by the given
    paths.  Without a command the slice is simulated in-process using
    ``dataset`` and ``engine``."""

    engine_command: Optional[str] = None
    timeout: float = 60.0
    fail_on: FrozenSet[Termination] = DEFAULT_FAIL_ON
    dataset_path: str = ""
    background_path: str = ""
    crash_exit_code: int = CRASH_EXIT_CODE
    dataset: Optional[Dataset] = None
    engine: EngineConfig = field(default_factory=EngineConfig)

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.engine_command is None and self.dataset is None:
            raise ValueError("an in-process crash oracle needs a dataset")


@dataclass(frozen=True)
class DiffOracleConfig:
    baseline: EngineConfig
    candidate: EngineConfig
    dataset: Dataset

    def __post_init__(self) -> None:
        if self.baseline.fault is not None:
            raise ValueError("the baseline engine must not carry a fault")


def _materialized(s) -> Trace:
    return s.materialize() if isinstance(s, Slice) else s


def _classify(returncode: int, cfg: CrashOracleConfig) -> TestOutcome:
    if returncode == 0:
        return TestOutcome.PASS
    if returncode < 0:
        return TestOutcome.FAIL if Termination.SIGNAL in cfg.fail_on else TestOutcome.UNRESOLVED
    if returncode == cfg.crash_exit_code and Termination.CRASH_EXIT in cfg.fail_on:
        return TestOutcome.FAIL
    if Termination.NONZERO_EXIT in cfg.fail_on:
        return TestOutcome.FAIL
    return TestOutcome.UNRESOLVED


def _run_command(trace: Trace, cfg: CrashOracleConfig) -> TestOutcome:
    assert cfg.engine_command is not None
    fd, path = tempfile.mkstemp(prefix="tracedd-", suffix=".trace")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(print_trace(trace))
        command = cfg.engine_command.format(
            trace=shlex.quote(path),
            dataset=shlex.quote(cfg.dataset_path) if cfg.dataset_path else "",
            background=shlex.quote(cfg.background_path) if cfg.background_path else "",
        )
        try:
            proc = subprocess.run(
                shlex.split(command),
                stdin=subprocess.DEVNULL,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                timeout=cfg.timeout,
            )
        except subprocess.TimeoutExpired:
            return TestOutcome.FAIL if Termination.TIMEOUT in cfg.fail_on else TestOutcome.UNRESOLVED
        except OSError as exc:
            log.warning("could not launch %r: %s", command, exc)
            return TestOutcome.UNRESOLVED
        return _classify(proc.returncode, cfg)
    finally:
        os.unlink(path)


def crash_test(s, cfg: CrashOracleConfig, memo: Optional[ResultMemo] = None) -> TestOutcome:
    trace = _materialized(s)
    if not trace.iterations:
        return TestOutcome.PASS
    if cfg.engine_command is not None:
        return _run_command(trace, cfg)
    assert cfg.dataset is not None
    try:
        report = simulate(trace, cfg.dataset, cfg.engine, memo)
    except UnknownExample:
        return TestOutcome.UNRESOLVED
    if report.outcome.kind is OutcomeKind.CRASHED:
        return TestOutcome.FAIL
    if report.outcome.kind is OutcomeKind.BUDGET_EXHAUSTED:
        return TestOutcome.FAIL if Termination.TIMEOUT in cfg.fail_on else TestOutcome.UNRESOLVED
    return TestOutcome.PASS


def locate_divergence(baseline_log: SuccessLog, candidate_log: SuccessLog) -> List[Run]:
    """Runs whose success bits differ, then runs present in only one log."""
    base = baseline_log.as_dict()
    cand = candidate_log.as_dict()
    out: List[Run] = []
    for run, ok in base.items():
        if run not in cand or cand[run] != ok:
            out.append(run)
    out.extend(run for run in cand if run not in base)
    return out


def _diff_logs(s, cfg: DiffOracleConfig, memo: Optional[ResultMemo]) -> Tuple[TestOutcome, List[Run]]:
    trace = _materialized(s)
    memo = memo if memo is not None else ResultMemo()
    try:
        base = simulate(trace, cfg.dataset, cfg.baseline, memo)
        cand = simulate(trace, cfg.dataset, cfg.candidate, memo)
    except UnknownExample:
        return TestOutcome.UNRESOLVED, []
    if OutcomeKind.BUDGET_EXHAUSTED in (base.outcome.kind, cand.outcome.kind):
        return TestOutcome.UNRESOLVED, []
    diverging = locate_divergence(base.log, cand.log)
    return (TestOutcome.FAIL if diverging else TestOutcome.PASS), diverging


def diff_test(s, cfg: DiffOracleConfig, memo: Optional[ResultMemo] = None) -> TestOutcome:
    return _diff_logs(s, cfg, memo)[0]


class CrashOracle:
    """Callable crash oracle with a fault-free result memo shared across calls."""

    def __init__(self, cfg: CrashOracleConfig) -> None:
        self.cfg = cfg
        self.memo = ResultMemo()

    def __call__(self, s) -> TestOutcome:
        return crash_test(s, self.cfg, self.memo)


class DiffOracle:
    """Callable differential oracle.

    Fault-free evaluation results are memoized across calls; the baseline and
    the candidate both read from that memo, and the candidate's fault layer
    is applied on top.
    """

    def __init__(self, cfg: DiffOracleConfig) -> None:
        if cfg.baseline.step_budget != cfg.candidate.step_budget or (
            cfg.baseline.depth_budget != cfg.candidate.depth_budget
        ):
            raise ValueError("baseline and candidate must share budgets to share a result memo")
        self.cfg = cfg
        self.memo = ResultMemo()

    def __call__(self, s) -> TestOutcome:
        return diff_test(s, self.cfg, self.memo)

    def divergence(self, s) -> List[Run]:
        return _diff_logs(s, self.cfg, self.memo)[1]
