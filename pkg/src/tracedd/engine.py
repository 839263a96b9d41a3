"""Conjunctive query evaluation, trace simulation and planted faults.

Evaluation is plain SLD resolution: depth-first, atoms left to right,
example facts in file order before background clauses in file order.  A
query succeeds when at least one solution exists.

A :class:`FaultSpec` stands in for a buggy optimised execution mechanism.
It intercepts whole-query results, keyed on query *content* so that a
fault keeps firing no matter how the trace around it is sliced.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from .dataset import Dataset, Example, UnknownExample, predicate_key
from .term import (
    Clause,
    Compound,
    Constant,
    Term,
    Variable,
    list_items,
    make_list,
    print_term,
    read_terms,
    unify,
    variables_of,
)
from .trace import QueryUid, Run, Trace, uid_from_term, uid_term

__all__ = [
    "BudgetExhausted",
    "Effect",
    "FaultSpec",
    "FaultState",
    "EngineConfig",
    "CRASH",
    "SuccessLog",
    "Outcome",
    "OutcomeKind",
    "RunReport",
    "evaluate_query",
    "apply_fault",
    "simulate",
    "ResultMemo",
    "COMPLETED",
    "query_matches",
    "parse_fault_spec",
    "load_fault_spec",
    "print_fault_spec",
    "print_log",
    "parse_log",
]

DEFAULT_STEP_BUDGET = 100_000
DEFAULT_DEPTH_BUDGET = 1_000


class BudgetExhausted(RuntimeError):
    """Raised when evaluation hits the step or depth budget."""


class Effect(enum.Enum):
    CRASH = "crash"
    FLIP_RESULT = "flip_result"
    CORRUPT_THEN_FLIP = "corrupt_then_flip"


@dataclass(frozen=True)
class FaultSpec:
    trigger: Term
    effect: Effect
    arms: Tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", tuple(self.arms))
        if self.effect is Effect.CORRUPT_THEN_FLIP and not self.arms:
            raise ValueError("corrupt_then_flip needs at least one arm pattern")


@dataclass(frozen=True)
class EngineConfig:
    fault: Optional[FaultSpec] = None
    step_budget: int = DEFAULT_STEP_BUDGET
    depth_budget: int = DEFAULT_DEPTH_BUDGET

    def __post_init__(self) -> None:
        if self.step_budget < 1 or self.depth_budget < 1:
            raise ValueError("budgets must be positive")

    def without_fault(self) -> "EngineConfig":
        return EngineConfig(None, self.step_budget, self.depth_budget)


# ---------------------------------------------------------------------------
# resolution

# A goal list is a cons chain: (atom, depth, rest) or None.
_Goals = Optional[Tuple[Term, int, "_Goals"]]


class _Counter:
    __slots__ = ("steps", "renames")

    def __init__(self) -> None:
        self.steps = 0
        self.renames = 0


def _rename(t: Term, suffix: str) -> Term:
    if isinstance(t, Variable):
        return Variable(t.name + suffix)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_rename(a, suffix) for a in t.args))
    return t


def _resolvents(
    goal: Term,
    depth: int,
    rest: _Goals,
    s: Dict,
    example: Example,
    dataset: Dataset,
    config: EngineConfig,
    counter: _Counter,
) -> Iterator[Tuple[_Goals, Dict]]:
    key = predicate_key(goal)
    for fact in example.facts_for(key):
        counter.steps += 1
        if counter.steps > config.step_budget:
            raise BudgetExhausted(f"step budget {config.step_budget} exhausted")
        s2 = unify(goal, fact, s)
        if s2 is not None:
            yield rest, s2
    for clause in dataset.clauses_for(key):
        counter.steps += 1
        if counter.steps > config.step_budget:
            raise BudgetExhausted(f"step budget {config.step_budget} exhausted")
        counter.renames += 1
        suffix = f"#{counter.renames}"
        head = _rename(clause.head, suffix)
        s2 = unify(goal, head, s)
        if s2 is None:
            continue
        goals = rest
        if clause.body:
            if depth + 1 > config.depth_budget:
                raise BudgetExhausted(f"depth budget {config.depth_budget} exhausted")
            for atom in reversed(clause.body):
                goals = (_rename(atom, suffix), depth + 1, goals)
        yield goals, s2


def evaluate_query(
    query: Sequence[Term],
    example: Example,
    background: Union[Dataset, Sequence[Clause]] = (),
    config: EngineConfig = EngineConfig(),
) -> bool:
    """True iff some substitution satisfies every atom of ``query``.

    Raises :class:`BudgetExhausted` if the search runs out of budget
    before finding a solution.
    """
    dataset = background if isinstance(background, Dataset) else Dataset({}, tuple(background))
    goals: _Goals = None
    for atom in reversed(tuple(query)):
        if isinstance(atom, Variable):
            raise ValueError("query atoms must not be variables")
        goals = (atom, 0, goals)
    if goals is None:
        return True
    counter = _Counter()
    stack: List[Iterator[Tuple[_Goals, Dict]]] = [iter([(goals, {})])]
    while stack:
        state = next(stack[-1], None)
        if state is None:
            stack.pop()
            continue
        pending, s = state
        if pending is None:
            return True
        goal, depth, rest = pending
        stack.append(_resolvents(goal, depth, rest, s, example, dataset, config, counter))
    return False


# ---------------------------------------------------------------------------
# fault layer


class _Crash:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "CRASH"


CRASH = _Crash()

FaultState = FrozenSet[int]  # indices of arm patterns that have fired


def query_matches(pattern: Term, query: Sequence[Term]) -> bool:
    """Whether ``pattern`` unifies with some atom of ``query``."""
    renamed = _rename(pattern, "#p") if variables_of(pattern) else pattern
    return any(unify(renamed, atom) is not None for atom in query)


def apply_fault(
    config: EngineConfig,
    query: Sequence[Term],
    true_result: bool,
    state: FaultState = frozenset(),
) -> Tuple[Union[bool, _Crash], FaultState]:
    """Intercept one (query, example) run.

    The trigger is checked against the state *before* this run; arming
    happens afterwards, so a query matching both an arm and the trigger
    cannot set itself off on its first run.
    """
    fault = config.fault
    if fault is None:
        return true_result, state
    return _apply(fault, query, true_result, state, _Matcher(fault))


class _Matcher:
    """Memoised pattern matching of one fault against queries."""

    def __init__(self, fault: FaultSpec) -> None:
        self.fault = fault
        self._memo: Dict[Tuple[Term, ...], Tuple[bool, Tuple[int, ...]]] = {}

    def __call__(self, query: Sequence[Term]) -> Tuple[bool, Tuple[int, ...]]:
        key = tuple(query)
        hit = self._memo.get(key)
        if hit is None:
            trig = query_matches(self.fault.trigger, key)
            arms = tuple(i for i, p in enumerate(self.fault.arms) if query_matches(p, key))
            hit = self._memo[key] = (trig, arms)
        return hit


def _apply(fault: FaultSpec, query, true_result: bool, state: FaultState, matcher: _Matcher):
    triggered, arms = matcher(query)
    result: Union[bool, _Crash] = true_result
    if triggered and len(state) == len(fault.arms):
        result = CRASH if fault.effect is Effect.CRASH else not true_result
    if arms:
        state = state | frozenset(arms)
    return result, state


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SuccessLog:
    entries: Tuple[Tuple[QueryUid, Constant, bool], ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def as_dict(self) -> Dict[Run, bool]:
        return {Run(u, x): ok for u, x, ok in self.entries}


class OutcomeKind(enum.Enum):
    COMPLETED = "completed"
    CRASHED = "crashed"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    uid: Optional[QueryUid] = None
    example_id: Optional[Constant] = None

    def __str__(self) -> str:
        if self.kind is OutcomeKind.COMPLETED:
            return "completed"
        return f"{self.kind.value}({self.uid},{print_term(self.example_id)})"  # type: ignore[arg-type]


COMPLETED = Outcome(OutcomeKind.COMPLETED)


@dataclass(frozen=True)
class RunReport:
    log: SuccessLog
    outcome: Outcome


_EXHAUSTED = object()


@dataclass
class ResultMemo:
    """Fault-free results keyed by (query atoms, example id).

    Sound because fault-free evaluation is history independent; sharing one
    memo across simulations of many slices avoids re-running the prover.
    """

    table: Dict[Tuple[Tuple[Term, ...], Constant], object] = field(default_factory=dict)

    def result(self, query: Tuple[Term, ...], example: Example, dataset: Dataset, config: EngineConfig) -> object:
        key = (query, example.id)
        hit = self.table.get(key)
        if hit is None:
            try:
                hit = evaluate_query(query, example, dataset, config)
            except BudgetExhausted:
                hit = _EXHAUSTED
            self.table[key] = hit
        return hit


def simulate(
    trace: Trace,
    dataset: Dataset,
    config: EngineConfig = EngineConfig(),
    memo: Optional[ResultMemo] = None,
) -> RunReport:
    """Run every query of ``trace`` on each of its examples, in order."""
    for x in trace.example_ids():
        if x not in dataset.examples:
            raise UnknownExample(x)
    memo = memo if memo is not None else ResultMemo()
    fault = config.fault
    matcher = _Matcher(fault) if fault is not None else None
    state: FaultState = frozenset()
    log: List[Tuple[QueryUid, Constant, bool]] = []
    for entry in trace.entries():
        for x in entry.example_ids:
            res = memo.result(entry.query, dataset.examples[x], dataset, config)
            if res is _EXHAUSTED:
                return RunReport(SuccessLog(tuple(log)), Outcome(OutcomeKind.BUDGET_EXHAUSTED, entry.uid, x))
            assert isinstance(res, bool)
            reported: Union[bool, _Crash] = res
            if fault is not None:
                reported, state = _apply(fault, entry.query, res, state, matcher)  # type: ignore[arg-type]
            if reported is CRASH:
                return RunReport(SuccessLog(tuple(log)), Outcome(OutcomeKind.CRASHED, entry.uid, x))
            log.append((entry.uid, x, bool(reported)))
    return RunReport(SuccessLog(tuple(log)), COMPLETED)


# ---------------------------------------------------------------------------
# file formats


def _arm_patterns(t: Term) -> Tuple[Term, ...]:
    if t == Constant("none"):
        return ()
    items = list_items(t)
    return tuple(items) if items is not None else (t,)


def parse_fault_spec(text: str) -> FaultSpec:
    """Read ``fault(arm(P), trigger(T), effect(E)).``

    ``arm`` takes a single pattern, a list of patterns (all must have fired
    before the trigger) or ``none``.
    """
    terms = read_terms(text)
    if len(terms) != 1:
        raise ValueError("fault spec file must contain exactly one fault(...) term")
    t = terms[0][0]
    if not (isinstance(t, Compound) and t.functor == "fault"):
        raise ValueError("expected fault(arm(...), trigger(...), effect(...))")
    fields: Dict[str, Term] = {}
    for a in t.args:
        if not (isinstance(a, Compound) and a.arity == 1 and a.functor in ("arm", "trigger", "effect")):
            raise ValueError(f"unexpected fault field {print_term(a)}")
        if a.functor in fields:
            raise ValueError(f"duplicate fault field {a.functor}")
        fields[a.functor] = a.args[0]
    if "trigger" not in fields or "effect" not in fields:
        raise ValueError("fault spec needs trigger(...) and effect(...)")
    eff = fields["effect"]
    if not isinstance(eff, Constant) or not isinstance(eff.value, str):
        raise ValueError("effect must be one of crash, flip_result, corrupt_then_flip")
    try:
        effect = Effect(eff.value)
    except ValueError:
        raise ValueError(f"unknown effect {eff.value!r}") from None
    trigger = fields["trigger"]
    if isinstance(trigger, Variable):
        raise ValueError("trigger pattern must not be a bare variable")
    arms = _arm_patterns(fields.get("arm", Constant("none")))
    return FaultSpec(trigger, effect, arms)


def load_fault_spec(path: str) -> FaultSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_fault_spec(fh.read())


def print_fault_spec(f: FaultSpec) -> str:
    if not f.arms:
        arm = "none"
    elif len(f.arms) == 1:
        arm = print_term(f.arms[0])
    else:
        arm = print_term(make_list(f.arms))
    return f"fault(arm({arm}), trigger({print_term(f.trigger)}), effect({f.effect.value})).\n"


def print_log(log: SuccessLog) -> str:
    return "".join(
        f"run({print_term(uid_term(u))}, {print_term(x)}, {'true' if ok else 'false'}).\n" for u, x, ok in log.entries
    )


def parse_log(text: str) -> SuccessLog:
    entries = []
    for t, line, _ in read_terms(text):
        if not (isinstance(t, Compound) and t.functor == "run" and t.arity == 3):
            raise ValueError(f"expected run(Uid, Example, Bool) at line {line}")
        uid_t, x, ok = t.args
        if not isinstance(x, Constant) or ok not in (Constant("true"), Constant("false")):
            raise ValueError(f"malformed run entry at line {line}")
        entries.append((uid_from_term(uid_t), x, ok == Constant("true")))
    return SuccessLog(tuple(entries))

