"""Delta debugging over trace slices.

:func:`ddmin` is the core recursion on any sequence of hashable units:

* split the current set into ``n`` contiguous parts; if a part fails,
  continue with it at ``n = 2`` (reduce to subset);
* otherwise, if some complement fails, continue with it at
  ``max(n - 1, 2)`` (reduce to complement);
* otherwise double ``n`` up to the set size (increase granularity), or
  stop when every part is a single unit.

Parts and complements are tried in partition order and the first failure
wins.  At ``n = 2`` each complement is the other part, so complements are
not re-tested.  The empty set passes without consulting the oracle.

The slice-level wrappers (:func:`ddebug`, :func:`ddebug_cached`,
:func:`ddebug_composed`) apply the recursion to :class:`~tracedd.trace.Slice`
objects and report statistics in the shape of the usual
"granularity / tests / resulting trace" table.
"""

from __future__ import annotations

import enum
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple, TypeVar, Union

from .trace import Granularity, Slice, Trace, materialize

__all__ = [
    "TestOutcome",
    "EntryConditionViolated",
    "DDStats",
    "ScheduleStats",
    "MinimalityReport",
    "partition",
    "ddmin",
    "ddebug",
    "ddebug_cached",
    "ddebug_composed",
    "verify_one_minimal",
    "brute_force_global_min",
    "worst_case_tests",
]

U = TypeVar("U", bound=Hashable)


class TestOutcome(enum.Enum):
    FAIL = "fail"
    PASS = "pass"
    UNRESOLVED = "unresolved"

    __test__ = False  # not a pytest class


class EntryConditionViolated(Exception):
    """The input handed to the minimizer does not reproduce the failure."""


@dataclass
class DDStats:
    granularity: Optional[str] = None
    tests_executed: int = 0
    cache_hits: int = 0
    unresolved: int = 0
    wall_time: float = 0.0
    input_units: int = 0
    result_units: int = 0
    # (iterations, queries, runs) of the materialized result
    result_unit_counts: Optional[Tuple[int, int, int]] = None
    # (tests executed so far, current slice size) after every reduction
    history: List[Tuple[int, int]] = field(default_factory=list)

    def as_dict(self) -> Dict[str, object]:
        d: Dict[str, object] = {
            "granularity": self.granularity,
            "tests": self.tests_executed,
            "cache_hits": self.cache_hits,
            "unresolved": self.unresolved,
            "time_s": round(self.wall_time, 6),
            "input_units": self.input_units,
            "result_units": self.result_units,
        }
        if self.result_unit_counts is not None:
            it, qu, r = self.result_unit_counts
            d["result"] = {"iterations": it, "queries": qu, "runs": r}
        d["history"] = [list(h) for h in self.history]
        return d


@dataclass
class ScheduleStats:
    """Per-stage statistics of a composed run, in application order."""

    stages: List[DDStats] = field(default_factory=list)

    @property
    def tests_executed(self) -> int:
        return sum(s.tests_executed for s in self.stages)

    @property
    def cache_hits(self) -> int:
        return sum(s.cache_hits for s in self.stages)

    @property
    def unresolved(self) -> int:
        return sum(s.unresolved for s in self.stages)

    @property
    def wall_time(self) -> float:
        return sum(s.wall_time for s in self.stages)

    @property
    def result_unit_counts(self) -> Optional[Tuple[int, int, int]]:
        return self.stages[-1].result_unit_counts if self.stages else None


@dataclass
class MinimalityReport:
    is_one_minimal: bool
    global_min_size: Optional[int]
    witnesses: List[Hashable]

    def __post_init__(self) -> None:
        assert self.is_one_minimal == (not self.witnesses)


def worst_case_tests(size: int) -> int:
    return size * size + 3 * size


# ---------------------------------------------------------------------------
# core


def _partition_bounds(size: int, n: int) -> List[Tuple[int, int]]:
    if not 1 <= n <= size:
        raise ValueError(f"cannot split {size} units into {n} parts")
    q, r = divmod(size, n)
    bounds = []
    start = 0
    for i in range(n):
        end = start + q + (1 if i < r else 0)
        bounds.append((start, end))
        start = end
    return bounds


def partition(s, n: int):
    """Split into ``n`` contiguous parts, sizes differing by at most one,
    larger parts first.  Accepts a :class:`Slice` or a plain sequence."""
    units = s.units if isinstance(s, Slice) else tuple(s)
    parts = [units[a:b] for a, b in _partition_bounds(len(units), n)]
    if isinstance(s, Slice):
        return [s.with_units(p) for p in parts]
    return [list(p) for p in parts]


class _Tester:
    def __init__(
        self,
        test: Callable[[Tuple], TestOutcome],
        stats: DDStats,
        cache: Optional[Dict],
        key: Optional[Callable[[Tuple], Hashable]],
        parallel: int,
    ) -> None:
        self.test = test
        self.stats = stats
        self.cache = cache
        self.key = key or (lambda units: units)
        self.pool = ThreadPoolExecutor(max_workers=parallel) if parallel > 1 else None

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()

    def _invoke(self, units: Tuple) -> TestOutcome:
        out = self.test(units)
        if not isinstance(out, TestOutcome):
            raise TypeError(f"test function returned {out!r}, expected a TestOutcome")
        return out

    def _record(self, out: TestOutcome) -> None:
        self.stats.tests_executed += 1
        if out is TestOutcome.UNRESOLVED:
            self.stats.unresolved += 1

    def __call__(self, units: Tuple) -> TestOutcome:
        if not units:
            return TestOutcome.PASS
        if self.cache is None:
            out = self._invoke(units)
            self._record(out)
            return out
        k = self.key(units)
        hit = self.cache.get(k)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        out = self._invoke(units)
        self._record(out)
        self.cache[k] = out
        return out

    def first_failing(self, candidates: Sequence[Tuple]) -> Optional[int]:
        if self.pool is None:
            for i, c in enumerate(candidates):
                if self(c) is TestOutcome.FAIL:
                    return i
            return None
        return self._first_failing_parallel(candidates)

    def _first_failing_parallel(self, candidates: Sequence[Tuple]) -> Optional[int]:
        # The whole round is evaluated, so counts depend only on the round,
        # never on completion order; the lowest-index failure is chosen.
        assert self.pool is not None
        outcomes: List[Optional[TestOutcome]] = [None] * len(candidates)
        pending: Dict[Hashable, List[int]] = {}
        for i, c in enumerate(candidates):
            if not c:
                outcomes[i] = TestOutcome.PASS
                continue
            if self.cache is None:
                pending.setdefault(("#", i), []).append(i)
                continue
            k = self.key(c)
            hit = self.cache.get(k)
            if hit is not None:
                self.stats.cache_hits += 1
                outcomes[i] = hit
            else:
                if k in pending:
                    self.stats.cache_hits += 1
                pending.setdefault(k, []).append(i)
        keys = list(pending)
        futures = [self.pool.submit(self._invoke, candidates[pending[k][0]]) for k in keys]
        for k, fut in zip(keys, futures):
            out = fut.result()
            self._record(out)
            if self.cache is not None:
                self.cache[k] = out
            for i in pending[k]:
                outcomes[i] = out
        for i, out in enumerate(outcomes):
            if out is TestOutcome.FAIL:
                return i
        return None


def ddmin(
    units: Sequence[U],
    test: Callable[[Tuple[U, ...]], TestOutcome],
    *,
    cache: Union[bool, Dict, None] = True,
    key: Optional[Callable[[Tuple[U, ...]], Hashable]] = None,
    check_entry: bool = True,
    parallel: int = 0,
    stats: Optional[DDStats] = None,
) -> Tuple[Tuple[U, ...], DDStats]:
    """Reduce ``units`` to a 1-minimal failing subsequence.

    ``cache`` may be ``True`` (private memo), ``False``/``None`` (every test
    hits the oracle) or a dict shared with other runs.  ``key`` maps a unit
    tuple to its cache key.
    """
    stats = stats if stats is not None else DDStats()
    memo: Optional[Dict]
    if cache is True:
        memo = {}
    elif cache is False or cache is None:
        memo = None
    else:
        memo = cache
    current = tuple(units)
    stats.input_units = len(current)
    started = time.perf_counter()
    tester = _Tester(test, stats, memo, key, parallel)
    try:
        if check_entry and tester(current) is not TestOutcome.FAIL:
            raise EntryConditionViolated("the full input does not fail")
        stats.history.append((stats.tests_executed, len(current)))
        n = 2
        while len(current) >= 2:
            bounds = _partition_bounds(len(current), n)
            parts = [current[a:b] for a, b in bounds]
            i = tester.first_failing(parts)
            if i is not None:
                current, n = parts[i], 2
                stats.history.append((stats.tests_executed, len(current)))
                continue
            if n > 2:
                comps = [current[:a] + current[b:] for a, b in bounds]
                i = tester.first_failing(comps)
                if i is not None:
                    current, n = comps[i], max(n - 1, 2)
                    stats.history.append((stats.tests_executed, len(current)))
                    continue
            if n < len(current):
                n = min(len(current), 2 * n)
                continue
            break
    finally:
        tester.close()
        stats.wall_time += time.perf_counter() - started
    stats.result_units = len(current)
    return current, stats


# ---------------------------------------------------------------------------
# slice-level API


def _units_and_test(s, test):
    if isinstance(s, Slice):
        return s.units, (lambda units: test(s.with_units(units))), s.with_units
    return tuple(s), test, list


def ddebug(s, test: Callable, *, check_entry: bool = True):
    """Minimize without memoization: every tested set reaches the oracle."""
    units, unit_test, wrap = _units_and_test(s, test)
    result, _ = ddmin(units, unit_test, cache=False, check_entry=check_entry)
    return wrap(result)


def _fill_counts(stats: DDStats, result) -> None:
    if isinstance(result, Slice):
        stats.granularity = result.granularity.value
        stats.result_unit_counts = materialize(result).counts()


def ddebug_cached(
    s,
    test: Callable,
    *,
    cache: Optional[Dict] = None,
    key: Optional[Callable] = None,
    parallel: int = 0,
    check_entry: bool = True,
):
    """Minimize with memoization; returns ``(result, DDStats)``."""
    units, unit_test, wrap = _units_and_test(s, test)
    result, stats = ddmin(
        units,
        unit_test,
        cache=cache if cache is not None else True,
        key=key,
        parallel=parallel,
        check_entry=check_entry,
    )
    out = wrap(result)
    _fill_counts(stats, out)
    return out, stats


def ddebug_composed(
    trace: Trace,
    test: Callable[[Slice], TestOutcome],
    schedule: Sequence[Granularity],
    *,
    parallel: int = 0,
) -> Tuple[Trace, ScheduleStats]:
    """Run one minimization per granularity, in ``schedule`` order.

    Each stage starts from the materialized result of the previous one.
    The memo is shared by all stages and keyed on the materialized run set,
    so the same trace reached at two granularities is tested once.
    """
    if not schedule:
        raise ValueError("empty granularity schedule")
    cache: Dict = {}
    stats = ScheduleStats()
    current = trace
    for stage, g in enumerate(schedule):
        s = Slice.full(current, g)

        def key(units, _s=s):
            return tuple(materialize(_s.with_units(units)).runs())

        try:
            result, st = ddebug_cached(s, test, cache=cache, key=key, parallel=parallel)
        except EntryConditionViolated:
            if stage == 0:
                raise
            raise AssertionError(f"stage {stage + 1} ({g.value}) input no longer fails") from None
        stats.stages.append(st)
        current = materialize(result)
    return current, stats


def verify_one_minimal(s, test: Callable, size_cap: Optional[int] = None) -> MinimalityReport:
    """Check every single-unit removal.

    With ``size_cap`` set, slices up to that size also get an exhaustive
    global-minimum search; otherwise ``global_min_size`` stays unknown.
    """
    units, unit_test, _ = _units_and_test(s, test)
    if not units or unit_test(units) is not TestOutcome.FAIL:
        raise EntryConditionViolated("the slice does not fail")
    witnesses = []
    for i, u in enumerate(units):
        rest = units[:i] + units[i + 1 :]
        if rest and unit_test(rest) is TestOutcome.FAIL:
            witnesses.append(u)
    global_size = None
    if size_cap is not None:
        best = brute_force_global_min(units, unit_test, size_cap)
        global_size = len(best) if best is not None else None
    return MinimalityReport(not witnesses, global_size, witnesses)


def brute_force_global_min(s, test: Callable, size_cap: int = 16):
    """Smallest failing subset by exhaustive search, or None past ``size_cap``."""
    units, unit_test, wrap = _units_and_test(s, test)
    if len(units) > size_cap:
        return None
    for k in range(1, len(units) + 1):
        for combo in itertools.combinations(units, k):
            if unit_test(combo) is TestOutcome.FAIL:
                return wrap(combo)
    return None
