"""Example databases and background knowledge.

Example files hold one block per example::

    begin(model(1)).
    atom(a1,'c').
    bond(a1,a2).
    end(model(1)).

Background files hold ordinary clauses (``Head :- Body.`` or facts) and
are shared by every example.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .term import (
    Clause,
    Compound,
    Constant,
    Term,
    clause_from_term,
    clause_to_term,
    is_ground,
    print_term,
    read_terms,
)

__all__ = [
    "Example",
    "Dataset",
    "DatasetError",
    "UnknownExample",
    "load_dataset",
    "load_dataset_files",
    "lookup_example",
    "print_examples",
    "print_background",
    "predicate_key",
]


class DatasetError(ValueError):
    pass


class UnknownExample(KeyError):
    def __init__(self, example_id: Constant) -> None:
        super().__init__(example_id)
        self.example_id = example_id

    def __str__(self) -> str:
        return f"unknown example {print_term(self.example_id)}"


def predicate_key(t: Term) -> Tuple[object, int]:
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    assert isinstance(t, Constant)
    return (t.value, 0)


def _index(terms: Iterable) -> Dict[Tuple[object, int], Tuple]:
    out: Dict[Tuple[object, int], List] = {}
    for item in terms:
        head = item.head if isinstance(item, Clause) else item
        out.setdefault(predicate_key(head), []).append(item)
    return {k: tuple(v) for k, v in out.items()}


@dataclass(frozen=True)
class Example:
    id: Constant
    facts: Tuple[Term, ...]
    _index: Dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "facts", tuple(self.facts))
        for f in self.facts:
            if not is_ground(f):
                raise DatasetError(f"non-ground fact {print_term(f)} in example {print_term(self.id)}")
        object.__setattr__(self, "_index", _index(self.facts))

    def facts_for(self, key: Tuple[object, int]) -> Tuple[Term, ...]:
        return self._index.get(key, ())


@dataclass(frozen=True)
class Dataset:
    examples: Mapping[Constant, Example]
    background: Tuple[Clause, ...] = ()
    _index: Dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples", dict(self.examples))
        object.__setattr__(self, "background", tuple(self.background))
        object.__setattr__(self, "_index", _index(self.background))

    @classmethod
    def from_examples(cls, examples: Iterable[Example], background: Iterable[Clause] = ()) -> "Dataset":
        table: Dict[Constant, Example] = {}
        for ex in examples:
            if ex.id in table:
                raise DatasetError(f"duplicate example id {print_term(ex.id)}")
            table[ex.id] = ex
        return cls(table, tuple(background))

    def clauses_for(self, key: Tuple[object, int]) -> Tuple[Clause, ...]:
        return self._index.get(key, ())

    def ids(self) -> List[Constant]:
        return list(self.examples)


def lookup_example(d: Dataset, example_id: Constant) -> Example:
    try:
        return d.examples[example_id]
    except KeyError:
        raise UnknownExample(example_id) from None


def _model_marker(t: Term) -> Optional[Tuple[str, Term]]:
    if (
        isinstance(t, Compound)
        and t.functor in ("begin", "end")
        and t.arity == 1
        and isinstance(t.args[0], Compound)
        and t.args[0].functor == "model"
        and t.args[0].arity == 1
    ):
        return t.functor, t.args[0].args[0]
    return None


def load_dataset(examples_text: str, background_text: str = "") -> Dataset:
    """Parse an examples file and an optional background file."""
    examples: List[Example] = []
    seen = set()
    current: Optional[Constant] = None
    facts: List[Term] = []
    for t, line, _ in read_terms(examples_text):
        marker = _model_marker(t)
        if marker is not None:
            kind, ident = marker
            if not isinstance(ident, Constant):
                raise DatasetError(f"example id must be a constant (line {line})")
            if kind == "begin":
                if current is not None:
                    raise DatasetError(
                        f"begin(model({print_term(ident)})) inside unterminated block "
                        f"{print_term(current)} (line {line})"
                    )
                if ident in seen:
                    raise DatasetError(f"duplicate example id {print_term(ident)} (line {line})")
                current, facts = ident, []
            else:
                if current is None or ident != current:
                    raise DatasetError(f"end(model({print_term(ident)})) without matching begin (line {line})")
                seen.add(current)
                examples.append(Example(current, tuple(facts)))
                current = None
            continue
        if current is None:
            raise DatasetError(f"fact outside a model block (line {line})")
        if isinstance(t, Compound) and t.functor == ":-" and t.arity == 2:
            raise DatasetError(f"rules are not allowed inside model blocks (line {line})")
        if not is_ground(t):
            raise DatasetError(f"non-ground fact {print_term(t)} (line {line})")
        facts.append(t)
    if current is not None:
        raise DatasetError(f"unterminated block for example {print_term(current)}")
    if not examples:
        raise DatasetError("no examples")
    background = []
    for t, line, _ in read_terms(background_text):
        try:
            background.append(clause_from_term(t))
        except (ValueError, TypeError) as exc:
            raise DatasetError(f"bad clause at line {line}: {exc}") from None
    return Dataset.from_examples(examples, background)


def load_dataset_files(examples_path: str, background_path: Optional[str] = None) -> Dataset:
    with open(examples_path, encoding="utf-8") as fh:
        examples_text = fh.read()
    background_text = ""
    if background_path:
        with open(background_path, encoding="utf-8") as fh:
            background_text = fh.read()
    return load_dataset(examples_text, background_text)


def print_examples(d: Dataset) -> str:
    lines: List[str] = []
    for ident, ex in d.examples.items():
        tag = print_term(ident)
        lines.append(f"begin(model({tag})).")
        lines.extend(print_term(f) + "." for f in ex.facts)
        lines.append(f"end(model({tag})).")
        lines.append("")
    return "\n".join(lines)


def print_background(d: Dataset) -> str:
    return "".join(print_term(clause_to_term(c)) + ".\n" for c in d.background)

