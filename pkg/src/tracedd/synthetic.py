"""Seeded synthetic experiments: molecule-style data, a refinement-shaped
trace and a planted fault of one of three shapes.

``last``
    trigger on the final query of the trace, no arming;
``first_and_last``
    same trigger, armed by query ``q(1,1)``;
``first_and_middle``
    same trigger, armed by ``q(1,1)`` and by one query in the middle
    iteration.

The planted queries carry marker atoms (``marker(trigger)``,
``marker(arm1)``, ``marker(arm2)``) that are backed by background facts,
so they do not change fault-free results.  Markers are never inherited by
refinements.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .dataset import Dataset, Example, print_background, print_examples
from .engine import Effect, FaultSpec, print_fault_spec
from .term import Clause, Compound, Constant, Term, Variable, parse_term
from .trace import Iteration, QueryEntry, QueryUid, Trace, print_trace

__all__ = ["BUG_SHAPES", "PROFILES", "SyntheticCase", "generate", "distribute", "iteration_sizes"]

BUG_SHAPES = ("last", "first_and_last", "first_and_middle")
PROFILES = ("bulge", "flat")
ELEMENTS = ("c", "h", "o", "n", "cl", "s")
MAX_QUERY_LENGTH = 4

TRIGGER = Compound("marker", (Constant("trigger"),))
ARM1 = Compound("marker", (Constant("arm1"),))
ARM2 = Compound("marker", (Constant("arm2"),))

BACKGROUND = [
    Clause(TRIGGER),
    Clause(ARM1),
    Clause(ARM2),
    Clause(parse_term("bonded_to(X,E)"), (parse_term("bond(X,Y)"), parse_term("atom(Y,E)"))),
]


def _elem(e: str) -> Constant:
    return Constant(e, quoted=True)


@dataclass(frozen=True)
class SyntheticCase:
    trace: Trace
    dataset: Dataset
    fault: FaultSpec
    shape: str
    trigger: QueryUid
    arms: Tuple[QueryUid, ...]

    @property
    def required(self) -> Tuple[QueryUid, ...]:
        order = {e.uid: k for k, e in enumerate(self.trace.entries())}
        return tuple(sorted({self.trigger, *self.arms}, key=order.__getitem__))

    def reproduces(self, trace: Trace) -> bool:
        """Ground truth: some trigger run is preceded by a run of every arm.

        Decided from uids alone, without consulting the engine.
        """
        first_seen: Dict[QueryUid, int] = {}
        pos = 0
        for entry in trace.entries():
            for _ in entry.example_ids:
                if entry.uid == self.trigger and all(a in first_seen for a in self.arms):
                    return True
                first_seen.setdefault(entry.uid, pos)
                pos += 1
        return False

    def files(self) -> Dict[str, str]:
        return {
            "trace.pl": print_trace(self.trace),
            "examples.pl": print_examples(self.dataset),
            "background.pl": print_background(self.dataset),
            "fault.pl": print_fault_spec(self.fault),
        }


def distribute(total: int, parts: int) -> List[int]:
    """Split ``total`` into ``parts`` near-equal positive counts, larger first."""
    if parts < 1 or total < parts:
        raise ValueError("need at least one query per iteration")
    q, r = divmod(total, parts)
    return [q + (1 if i < r else 0) for i in range(parts)]


def iteration_sizes(iterations: int, total: int, profile: str = "bulge") -> List[int]:
    """Queries per iteration.

    ``bulge`` mimics a refinement search: few candidates at the start, a
    wide middle, and a narrowing end.  ``flat`` spreads queries evenly.
    """
    if profile == "flat":
        return distribute(total, iterations)
    if profile != "bulge":
        raise ValueError(f"unknown profile {profile!r}")
    if total < iterations:
        raise ValueError("need at least one query per iteration")
    weights = [0.15 + math.sin(math.pi * (i + 0.5) / iterations) for i in range(iterations)]
    spare = total - iterations
    scale = spare / sum(weights)
    raw = [w * scale for w in weights]
    sizes = [1 + int(r) for r in raw]
    by_remainder = sorted(range(iterations), key=lambda i: (-(raw[i] - int(raw[i])), i))
    for i in by_remainder[: total - sum(sizes)]:
        sizes[i] += 1
    return sizes


def _molecule(rng: random.Random, ex: int) -> List[Term]:
    n = rng.randint(4, 8)
    names = [Constant(f"a{ex}_{k}") for k in range(1, n + 1)]
    facts: List[Term] = [Compound("atom", (a, _elem(rng.choice(ELEMENTS)))) for a in names]
    edges = []
    for k in range(1, n):
        edges.append((rng.randrange(k), k))
    for _ in range(rng.randint(0, 2)):
        i, j = rng.sample(range(n), 2)
        if (i, j) not in edges and (j, i) not in edges:
            edges.append((i, j))
    for i, j in edges:
        facts.append(Compound("bond", (names[i], names[j])))
        facts.append(Compound("bond", (names[j], names[i])))
    return facts


class _Query:
    """A query under construction: atoms plus which variables have an element."""

    __slots__ = ("atoms", "nvars", "typed")

    def __init__(self, atoms: Tuple[Term, ...], nvars: int, typed: frozenset) -> None:
        self.atoms = atoms
        self.nvars = nvars
        self.typed = typed


def _var(k: int) -> Variable:
    return Variable(f"X{k}")


def _base_query(rng: random.Random) -> _Query:
    roll = rng.random()
    if roll < 0.6:
        return _Query((Compound("atom", (_var(1), _elem(rng.choice(ELEMENTS)))),), 1, frozenset({1}))
    if roll < 0.8:
        return _Query((Compound("bond", (_var(1), _var(2))),), 2, frozenset())
    return _Query((Compound("bonded_to", (_var(1), _elem(rng.choice(ELEMENTS)))),), 1, frozenset())


def _refine(rng: random.Random, q: _Query) -> _Query:
    v = rng.randint(1, q.nvars)
    untyped = [k for k in range(1, q.nvars + 1) if k not in q.typed]
    roll = rng.random()
    if untyped and roll < 0.35:
        k = rng.choice(untyped)
        lit = Compound("atom", (_var(k), _elem(rng.choice(ELEMENTS))))
        return _Query(q.atoms + (lit,), q.nvars, q.typed | {k})
    if roll < 0.8:
        new = q.nvars + 1
        return _Query(q.atoms + (Compound("bond", (_var(v), _var(new))),), new, q.typed)
    lit = Compound("bonded_to", (_var(v), _elem(rng.choice(ELEMENTS))))
    return _Query(q.atoms + (lit,), q.nvars, q.typed)


def _subset(rng: random.Random, ids: Sequence[Constant]) -> Tuple[Constant, ...]:
    picked = tuple(x for x in ids if rng.random() < 0.7)
    return picked or (ids[rng.randrange(len(ids))],)


def generate(
    iterations: int,
    queries_per_iteration: int,
    examples: int,
    bug_shape: str,
    seed: int = 0,
    *,
    total_queries: Optional[int] = None,
    effect: Optional[Effect] = None,
    profile: str = "bulge",
) -> SyntheticCase:
    """Build a synthetic case.  Same arguments, same case, byte for byte.

    The trace holds ``iterations * queries_per_iteration`` queries, or
    ``total_queries`` when given, laid out by :func:`iteration_sizes`.
    ``effect`` defaults to
    ``flip_result`` for the ``last`` shape and ``corrupt_then_flip`` for
    the dependent shapes.
    """
    if iterations < 1 or queries_per_iteration < 1 or examples < 1:
        raise ValueError("iterations, queries per iteration and examples must all be >= 1")
    if bug_shape not in BUG_SHAPES:
        raise ValueError(f"unknown bug shape {bug_shape!r}; expected one of {', '.join(BUG_SHAPES)}")
    total = total_queries if total_queries is not None else iterations * queries_per_iteration
    sizes = iteration_sizes(iterations, total, profile)
    needed = {"last": 1, "first_and_last": 2, "first_and_middle": 3}[bug_shape]
    if total < needed:
        raise ValueError(f"bug shape {bug_shape} needs at least {needed} queries")

    rng = random.Random(seed)
    ids = [Constant(k) for k in range(1, examples + 1)]
    dataset = Dataset.from_examples((Example(x, tuple(_molecule(rng, x.value))) for x in ids), BACKGROUND)

    plain: List[List[Tuple[_Query, Tuple[Constant, ...]]]] = []
    for i, size in enumerate(sizes):
        level: List[Tuple[_Query, Tuple[Constant, ...]]] = []
        prev = [p for p in plain[-1] if len(p[0].atoms) < MAX_QUERY_LENGTH] if plain else []
        for _ in range(size):
            if i == 0 or not prev or rng.random() < 0.1:
                q = _base_query(rng)
                level.append((q, tuple(ids) if i == 0 else _subset(rng, ids)))
            else:
                parent, parent_ids = prev[rng.randrange(len(prev))]
                level.append((_refine(rng, parent), _subset(rng, parent_ids)))
        plain.append(level)

    uids = [QueryUid(i, p) for i, level in enumerate(plain, 1) for p in range(1, len(level) + 1)]
    first, last = uids[0], uids[-1]
    trigger = last
    arms: Tuple[QueryUid, ...] = ()
    if bug_shape == "first_and_last":
        arms = (first,)
    elif bug_shape == "first_and_middle":
        mid_it = (iterations + 1) // 2
        middle = QueryUid(mid_it, (sizes[mid_it - 1] + 1) // 2)
        if middle in (first, last):
            middle = uids[total // 2]
        arms = (first, middle)

    markers: Dict[QueryUid, List[Term]] = {}
    for uid, marker in zip(arms, (ARM1, ARM2)):
        markers.setdefault(uid, []).append(marker)
    markers.setdefault(trigger, []).append(TRIGGER)

    its = []
    for i, level in enumerate(plain, 1):
        entries = []
        for p, (q, qids) in enumerate(level, 1):
            uid = QueryUid(i, p)
            entries.append(QueryEntry(uid, q.atoms + tuple(markers.get(uid, ())), qids))
        its.append(Iteration(i, tuple(entries)))
    trace = Trace(tuple(its))

    if effect is None:
        effect = Effect.FLIP_RESULT if bug_shape == "last" else Effect.CORRUPT_THEN_FLIP
    arm_patterns = tuple(m for m in (ARM1, ARM2)[: len(arms)])
    fault = FaultSpec(TRIGGER, effect, arm_patterns)
    return SyntheticCase(trace, dataset, fault, bug_shape, trigger, arms)
