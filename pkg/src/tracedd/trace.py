"""Query traces, granularity views and slices.

A trace file is a sequence of ``query(Conjunction, [ExampleIds]).`` facts.
Iterations are separated by blank lines, or by explicit
``iteration(N).`` markers (when any marker is present, blank lines are
ignored)::

    query((atom(X,'c')), [1,2,3,4,5]).
    query((atom(X,'h')), [1,2,3,4,5]).

    query((atom(X,'c'),atom(Y,'o'),bond(X,Y)), [1,5]).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .term import (
    Compound,
    Constant,
    Term,
    conjunction,
    conjuncts,
    list_items,
    make_list,
    parse_term,
    print_term,
    read_terms,
)

__all__ = [
    "QueryUid",
    "QueryEntry",
    "Iteration",
    "Trace",
    "TraceError",
    "EmptyExampleList",
    "Granularity",
    "Run",
    "Unit",
    "Slice",
    "parse_trace",
    "print_trace",
    "load_trace",
    "units_of",
    "materialize",
    "print_slice",
    "parse_slice",
    "uid_term",
    "uid_from_term",
    "trace_from_queries",
    "format_query_fact",
]


class TraceError(ValueError):
    pass


class EmptyExampleList(TraceError):
    pass


class QueryUid(NamedTuple):
    iteration: int
    position: int

    def __str__(self) -> str:
        return f"q({self.iteration},{self.position})"


def uid_term(uid: QueryUid) -> Term:
    return Compound("q", (Constant(uid.iteration), Constant(uid.position)))


def uid_from_term(t: Term) -> QueryUid:
    if (
        isinstance(t, Compound)
        and t.functor == "q"
        and t.arity == 2
        and all(isinstance(a, Constant) and isinstance(a.value, int) for a in t.args)
    ):
        return QueryUid(t.args[0].value, t.args[1].value)  # type: ignore[union-attr]
    raise TraceError(f"not a query uid: {print_term(t)}")


@dataclass(frozen=True)
class QueryEntry:
    uid: QueryUid
    query: Tuple[Term, ...]
    example_ids: Tuple[Constant, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "query", tuple(self.query))
        object.__setattr__(self, "example_ids", tuple(self.example_ids))
        if not self.example_ids:
            raise EmptyExampleList(f"query {self.uid} has an empty example list")
        if len(set(self.example_ids)) != len(self.example_ids):
            raise TraceError(f"query {self.uid} lists an example more than once")


@dataclass(frozen=True)
class Iteration:
    index: int
    entries: Tuple[QueryEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))


@dataclass(frozen=True)
class Trace:
    iterations: Tuple[Iteration, ...] = ()

    def __post_init__(self) -> None:
        its = tuple(it for it in self.iterations if it.entries)
        object.__setattr__(self, "iterations", its)
        uids = [e.uid for e in self.entries()]
        if len(set(uids)) != len(uids):
            raise TraceError("query uids must be unique")

    def entries(self) -> List[QueryEntry]:
        return [e for it in self.iterations for e in it.entries]

    def runs(self) -> List["Run"]:
        return [Run(e.uid, x) for e in self.entries() for x in e.example_ids]

    def example_ids(self) -> List[Constant]:
        seen: Dict[Constant, None] = {}
        for e in self.entries():
            for x in e.example_ids:
                seen.setdefault(x)
        return list(seen)

    def counts(self) -> Tuple[int, int, int]:
        """(iterations, queries, runs)"""
        entries = self.entries()
        return len(self.iterations), len(entries), sum(len(e.example_ids) for e in entries)

    def renumbered(self) -> "Trace":
        """Same content with uids and iteration indices reassigned from 1."""
        its = []
        for i, it in enumerate(self.iterations, 1):
            its.append(
                Iteration(
                    i,
                    tuple(QueryEntry(QueryUid(i, p), e.query, e.example_ids) for p, e in enumerate(it.entries, 1)),
                )
            )
        return Trace(tuple(its))


# ---------------------------------------------------------------------------
# reading and printing


def _query_entry(t: Term, uid: QueryUid, line: int) -> QueryEntry:
    if not (isinstance(t, Compound) and t.functor == "query" and t.arity == 2):
        raise TraceError(f"expected query(Conjunction, [Ids]) at line {line}, found {print_term(t)}")
    goal, ids_term = t.args
    ids = list_items(ids_term)
    if ids is None:
        raise TraceError(f"example list is not a proper list at line {line}")
    if not ids:
        raise EmptyExampleList(f"empty example list at line {line}")
    for x in ids:
        if not isinstance(x, Constant):
            raise TraceError(f"example ids must be constants at line {line}")
    if len(set(ids)) != len(ids):
        raise TraceError(f"duplicate example ids at line {line}")
    atoms = conjuncts(goal)
    for a in atoms:
        if not isinstance(a, (Compound, Constant)) or (isinstance(a, Constant) and isinstance(a.value, int)):
            raise TraceError(f"query atoms must be callable terms at line {line}")
    return QueryEntry(uid, atoms, tuple(ids))  # type: ignore[arg-type]


def _is_marker(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor == "iteration" and t.arity == 1


def parse_trace(text: str) -> Trace:
    terms = read_terms(text)
    if not terms:
        raise TraceError("trace contains no queries")
    lines = text.split("\n")

    groups: List[Tuple[int, List[Tuple[Term, int]]]] = []
    if any(_is_marker(t) for t, _, _ in terms):
        seen = set()
        for t, line, _ in terms:
            if _is_marker(t):
                n = t.args[0]  # type: ignore[union-attr]
                if not (isinstance(n, Constant) and isinstance(n.value, int)):
                    raise TraceError(f"iteration marker needs an integer at line {line}")
                if n.value in seen:
                    raise TraceError(f"duplicate iteration({n.value}) at line {line}")
                seen.add(n.value)
                groups.append((n.value, []))
            elif not groups:
                raise TraceError(f"query before the first iteration marker at line {line}")
            else:
                groups[-1][1].append((t, line))
    else:
        prev_end: Optional[int] = None
        for t, line, end in terms:
            if prev_end is None or any(not lines[k - 1].strip() for k in range(prev_end + 1, line)):
                groups.append((len(groups) + 1, []))
            groups[-1][1].append((t, line))
            prev_end = end

    iterations = []
    for index, items in groups:
        entries = tuple(_query_entry(t, QueryUid(index, p), line) for p, (t, line) in enumerate(items, 1))
        iterations.append(Iteration(index, entries))
    trace = Trace(tuple(iterations))
    if not trace.iterations:
        raise TraceError("trace contains no queries")
    return trace


def load_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


def format_query_fact(entry: QueryEntry) -> str:
    goal = print_term(conjunction(entry.query))
    if entry.query:
        goal = f"({goal})"
    ids = print_term(make_list(entry.example_ids))
    return f"query({goal}, {ids})."


def print_trace(t: Trace) -> str:
    """Blank-line separated iterations.

    Explicit markers are emitted only when iteration indices are not the
    plain sequence 1..k, so indices survive a round trip."""
    with_markers = [it.index for it in t.iterations] != list(range(1, len(t.iterations) + 1))
    blocks = []
    for it in t.iterations:
        lines = [f"iteration({it.index})."] if with_markers else []
        lines.extend(format_query_fact(e) for e in it.entries)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ---------------------------------------------------------------------------
# granularities and slices


class Granularity(enum.Enum):
    ITERATIONS = "iterations"
    QUERIES = "queries"
    RUNS = "runs"

    @classmethod
    def parse(cls, name: str) -> "Granularity":
        key = name.strip().lower()
        aliases = {"examples": "runs", "iteration": "iterations", "query": "queries", "run": "runs"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown granularity {name!r}") from None


class Run(NamedTuple):
    uid: QueryUid
    example_id: Constant


Unit = Union[int, QueryUid, Run]


def units_of(t: Trace, g: Granularity) -> List[Unit]:
    if g is Granularity.ITERATIONS:
        return [it.index for it in t.iterations]
    if g is Granularity.QUERIES:
        return [e.uid for e in t.entries()]
    return list(t.runs())


@dataclass(frozen=True)
class Slice:
    """An order-preserving subset of a trace's units at one granularity."""

    base: Trace
    granularity: Granularity
    units: Tuple[Unit, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))

    @classmethod
    def full(cls, base: Trace, g: Granularity) -> "Slice":
        return cls(base, g, tuple(units_of(base, g)))

    def with_units(self, units: Sequence[Unit]) -> "Slice":
        return Slice(self.base, self.granularity, tuple(units))

    def __len__(self) -> int:
        return len(self.units)

    def validate(self) -> None:
        order = {u: k for k, u in enumerate(units_of(self.base, self.granularity))}
        last = -1
        for u in self.units:
            k = order.get(u)
            if k is None:
                raise TraceError(f"unit {u} does not belong to the base trace")
            if k <= last:
                raise TraceError("slice units must follow base order without repeats")
            last = k

    def materialize(self) -> Trace:
        return materialize(self)

    def run_key(self) -> Tuple[Run, ...]:
        return tuple(materialize(self).runs())


def materialize(s: Slice) -> Trace:
    keep = set(s.units)
    its = []
    for it in s.base.iterations:
        if s.granularity is Granularity.ITERATIONS:
            if it.index in keep:
                its.append(it)
        elif s.granularity is Granularity.QUERIES:
            its.append(Iteration(it.index, tuple(e for e in it.entries if e.uid in keep)))
        else:
            entries = []
            for e in it.entries:
                ids = tuple(x for x in e.example_ids if Run(e.uid, x) in keep)
                if ids:
                    entries.append(e if len(ids) == len(e.example_ids) else QueryEntry(e.uid, e.query, ids))
            its.append(Iteration(it.index, tuple(entries)))
    return Trace(tuple(its))


def _unit_term(u: Unit) -> Term:
    if isinstance(u, Run):
        return Compound("r", (uid_term(u.uid), u.example_id))
    if isinstance(u, QueryUid):
        return uid_term(u)
    return Constant(u)


def print_slice(s: Slice) -> str:
    units = print_term(make_list(_unit_term(u) for u in s.units))
    return f"slice({s.granularity.value}, {units})."


def parse_slice(text: str, base: Trace) -> Slice:
    t = parse_term(text)
    if not (isinstance(t, Compound) and t.functor == "slice" and t.arity == 2 and isinstance(t.args[0], Constant)):
        raise TraceError("expected slice(Granularity, [Units])")
    g = Granularity.parse(str(t.args[0].value))
    items = list_items(t.args[1])
    if items is None:
        raise TraceError("slice units must be a list")
    units: List[Unit] = []
    for item in items:
        if g is Granularity.ITERATIONS and isinstance(item, Constant) and isinstance(item.value, int):
            units.append(item.value)
        elif g is Granularity.QUERIES:
            units.append(uid_from_term(item))
        elif g is Granularity.RUNS and isinstance(item, Compound) and item.functor == "r" and item.arity == 2:
            ex = item.args[1]
            if not isinstance(ex, Constant):
                raise TraceError("run example id must be a constant")
            units.append(Run(uid_from_term(item.args[0]), ex))
        else:
            raise TraceError(f"bad {g.value} unit {print_term(item)}")
    s = Slice(base, g, tuple(units))
    s.validate()
    return s


def trace_from_queries(iterations: Iterable[Iterable[Tuple[Sequence[Term], Sequence[Constant]]]]) -> Trace:
    """Build a trace with canonical uids from nested ``(atoms, ids)`` pairs."""
    its = []
    for i, items in enumerate(iterations, 1):
        entries = tuple(
            QueryEntry(QueryUid(i, p), tuple(atoms), tuple(ids)) for p, (atoms, ids) in enumerate(items, 1)
        )
        its.append(Iteration(i, entries))
    return Trace(tuple(its))

