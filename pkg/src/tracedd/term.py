"""First-order terms: representation, reading, printing and unification.

The concrete syntax is the small Prolog subset used by trace files and
example databases: atoms (bare or single-quoted), integers, variables,
compound terms, list sugar, and the two operators ``,`` (conjunction) and
``:-`` (clause neck).  ``%`` starts a comment running to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

__all__ = [
    "Term",
    "Variable",
    "Constant",
    "Compound",
    "Clause",
    "Substitution",
    "TermSyntaxError",
    "NIL",
    "parse_term",
    "read_terms",
    "print_term",
    "unify",
    "walk",
    "resolve",
    "variables_of",
    "is_ground",
    "make_list",
    "list_items",
    "conjunction",
    "conjuncts",
    "clause_from_term",
    "clause_to_term",
]


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __post_init__(self) -> None:
        if not self.name or not (self.name[0].isupper() or self.name[0] == "_"):
            raise ValueError(f"invalid variable name {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Constant:
    """An atom (``str``) or integer.

    ``quoted`` only records how an atom was written so printing can echo
    the source; it takes no part in equality or hashing.
    """

    value: Union[str, int]
    quoted: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, (str, int)):
            raise TypeError(f"constant value must be str or int, got {self.value!r}")

    def __str__(self) -> str:
        return print_term(self)


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: Tuple["Term", ...]

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("compound terms need at least one argument; use Constant")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return print_term(self)


Term = Union[Variable, Constant, Compound]
Substitution = Dict[str, Term]

NIL = Constant("[]")
CONS = "."


@dataclass(frozen=True)
class Clause:
    head: Term
    body: Tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", tuple(self.body))
        for t in (self.head, *self.body):
            if isinstance(t, Variable):
                raise ValueError("clause head and body atoms must not be variables")
        if isinstance(self.head, Constant) and isinstance(self.head.value, int):
            raise ValueError("clause head must be callable, not an integer")

    @property
    def is_fact(self) -> bool:
        return not self.body

    def __str__(self) -> str:
        return print_term(clause_to_term(self))


class TermSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# construction helpers


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Compound(CONS, (item, result))
    return result


def list_items(t: Term) -> Optional[List[Term]]:
    """Elements of a proper list, or None if ``t`` is not one."""
    items = []
    while isinstance(t, Compound) and t.functor == CONS and t.arity == 2:
        items.append(t.args[0])
        t = t.args[1]
    return items if t == NIL else None


def conjunction(atoms: Iterable[Term]) -> Term:
    atoms = list(atoms)
    if not atoms:
        return Constant("true")
    result = atoms[-1]
    for a in reversed(atoms[:-1]):
        result = Compound(",", (a, result))
    return result


def conjuncts(t: Term) -> Tuple[Term, ...]:
    """Flatten a ``,``-conjunction.  ``true`` is the empty conjunction."""
    if t == Constant("true"):
        return ()
    out: List[Term] = []
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Compound) and x.functor == "," and x.arity == 2:
            stack.append(x.args[1])
            stack.append(x.args[0])
        else:
            out.append(x)
    return tuple(out)


def clause_from_term(t: Term) -> Clause:
    if isinstance(t, Compound) and t.functor == ":-" and t.arity == 2:
        return Clause(t.args[0], conjuncts(t.args[1]))
    return Clause(t, ())


def clause_to_term(c: Clause) -> Term:
    if not c.body:
        return c.head
    return Compound(":-", (c.head, conjunction(c.body)))


def variables_of(t: Term) -> List[str]:
    """Variable names in order of first occurrence."""
    seen: Dict[str, None] = {}
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Variable):
            seen.setdefault(x.name)
        elif isinstance(x, Compound):
            stack.extend(reversed(x.args))
    return list(seen)


def is_ground(t: Term) -> bool:
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Variable):
            return False
        if isinstance(x, Compound):
            stack.extend(x.args)
    return True


# ---------------------------------------------------------------------------
# unification


def walk(t: Term, s: Substitution) -> Term:
    while isinstance(t, Variable):
        bound = s.get(t.name)
        if bound is None:
            return t
        t = bound
    return t


def unify(a: Term, b: Term, s: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most general unifier of ``a`` and ``b`` extending ``s``, or None.

    No occurs check.  ``s`` is never modified; a new dict is returned.
    """
    subst: Substitution = dict(s) if s else {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = walk(x, subst)
        y = walk(y, subst)
        if x is y:
            continue
        if isinstance(x, Variable):
            if not (isinstance(y, Variable) and y.name == x.name):
                subst[x.name] = y
        elif isinstance(y, Variable):
            subst[y.name] = x
        elif isinstance(x, Constant):
            if x != y:
                return None
        elif isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(reversed(x.args), reversed(y.args)))
        else:
            return None
    return subst


def resolve(t: Term, s: Substitution) -> Term:
    """Apply ``s`` to ``t`` with full dereferencing."""
    return _resolve(t, s, frozenset())


def _resolve(t: Term, s: Substitution, active: frozenset) -> Term:
    if isinstance(t, Variable):
        if t.name in active:
            raise ValueError(f"cyclic binding through variable {t.name}")
        bound = s.get(t.name)
        if bound is None:
            return t
        return _resolve(bound, s, active | {t.name})
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_resolve(a, s, active) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<int>-?\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>')
  | (?P<neck>:-)
  | (?P<end>\.(?=\s|%|$))
  | (?P<punct>[()\[\],|])
    """,
    re.VERBOSE,
)

_BARE_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", "'": "'"}


@dataclass(slots=True)
class _Token:
    kind: str
    text: str
    pos: int
    line: int
    col: int
    value: object = None  # decoded text of a quoted atom


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        col = i - line_start + 1
        if m is None:
            raise TermSyntaxError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        assert kind is not None
        if kind == "qatom":
            j = i + 1
            chars: List[str] = []
            while True:
                if j >= n:
                    raise TermSyntaxError("unterminated quoted atom", line, col)
                c = text[j]
                if c == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        chars.append("'")
                        j += 2
                        continue
                    j += 1
                    break
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in _ESCAPES:
                        raise TermSyntaxError("bad escape in quoted atom", line, col)
                    chars.append(_ESCAPES[text[j + 1]])
                    j += 2
                    continue
                if c == "\n":
                    raise TermSyntaxError("unterminated quoted atom", line, col)
                chars.append(c)
                j += 1
            tokens.append(_Token("qatom", text[i:j], i, line, col, "".join(chars)))
            i = j
            continue
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, chunk, i, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = i + chunk.rindex("\n") + 1
        i = m.end()
    tokens.append(_Token("eof", "", n, line, n - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.i = 0
        names = {t.text for t in self.tokens if t.kind == "var"}
        self._fresh = (f"_G{k}" for k in _count_from(1) if f"_G{k}" not in names)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Optional[_Token] = None) -> TermSyntaxError:
        tok = tok or self.peek()
        return TermSyntaxError(message, tok.line, tok.col)

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.text != text or tok.kind not in ("punct", "end"):
            if tok.kind in ("eof", "end") and text in ")]":
                raise self.error(f"unbalanced brackets: missing {text!r}")
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.advance()

    def _adjacent_open(self, tok: _Token) -> bool:
        nxt = self.peek()
        return nxt.kind == "punct" and nxt.text == "(" and nxt.pos == tok.pos + len(tok.text)

    def clause(self) -> Tuple[Term, int, int]:
        start = self.peek()
        t = self.expr(1200)
        end = self.peek()
        if end.kind != "end":
            if end.kind == "punct" and end.text in ")]":
                raise self.error(f"unbalanced brackets: unexpected {end.text!r}")
            raise self.error(f"expected '.' after term, found {end.text or 'end of input'!r}")
        self.advance()
        return t, start.line, end.line

    def expr(self, max_prec: int) -> Term:
        left = self.primary()
        left_prec = 0
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "," and max_prec >= 1000 and left_prec <= 999:
                self.advance()
                right = self.expr(1000)
                left, left_prec = Compound(",", (left, right)), 1000
            elif tok.kind == "neck" and max_prec >= 1200 and left_prec <= 1199:
                self.advance()
                right = self.expr(1199)
                left, left_prec = Compound(":-", (left, right)), 1200
            else:
                return left

    def primary(self) -> Term:
        tok = self.advance()
        if tok.kind == "int":
            return Constant(int(tok.text))
        if tok.kind == "var":
            if tok.text == "_":
                return Variable(next(self._fresh))
            return Variable(tok.text)
        if tok.kind in ("atom", "qatom"):
            name = tok.text if tok.kind == "atom" else tok.value
            assert isinstance(name, str)
            if self._adjacent_open(tok):
                self.advance()
                args = [self.expr(999)]
                while self.peek().kind == "punct" and self.peek().text == ",":
                    self.advance()
                    args.append(self.expr(999))
                self.expect(")")
                return Compound(name, tuple(args))
            return Constant(name, quoted=tok.kind == "qatom")
        if tok.kind == "punct" and tok.text == "(":
            inner = self.expr(1200)
            self.expect(")")
            return inner
        if tok.kind == "punct" and tok.text == "[":
            if self.peek().kind == "punct" and self.peek().text == "]":
                self.advance()
                return NIL
            items = [self.expr(999)]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.advance()
                items.append(self.expr(999))
            tail: Term = NIL
            if self.peek().kind == "punct" and self.peek().text == "|":
                self.advance()
                tail = self.expr(999)
            self.expect("]")
            return make_list(items, tail)
        if tok.kind == "eof":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {tok.text!r}", tok)


def _count_from(k: int) -> Iterator[int]:
    while True:
        yield k
        k += 1


def parse_term(text: str) -> Term:
    """Parse exactly one term.  A trailing ``.`` is optional."""
    p = _Parser(text)
    t = p.expr(1200)
    if p.peek().kind == "end":
        p.advance()
    tok = p.peek()
    if tok.kind != "eof":
        if tok.kind == "punct" and tok.text in ")]":
            raise p.error(f"unbalanced brackets: unexpected {tok.text!r}")
        raise p.error(f"unexpected trailing input {tok.text!r}")
    return t


def read_terms(text: str) -> List[Tuple[Term, int, int]]:
    """Read ``.``-terminated terms; yields ``(term, first_line, last_line)``.

    Anonymous variables are numbered per term, so ``_`` in two clauses
    never share a name."""
    p = _Parser(text)
    out = []
    while p.peek().kind != "eof":
        out.append(p.clause())
    return out


# ---------------------------------------------------------------------------
# printer


def _quote_atom(name: str) -> str:
    body = name.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n").replace("\t", "\\t")
    return f"'{body}'"


def _atom_text(name: str, prefer_quotes: bool = False) -> str:
    if name == "[]" and not prefer_quotes:
        return name
    if prefer_quotes or not _BARE_ATOM.match(name):
        return _quote_atom(name)
    return name


def print_term(t: Term) -> str:
    return _print(t, 1200)


def _print(t: Term, max_prec: int) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        if isinstance(t.value, int):
            return str(t.value)
        return _atom_text(t.value, t.quoted)
    if t.functor == CONS and t.arity == 2:
        items: List[str] = []
        x: Term = t
        while isinstance(x, Compound) and x.functor == CONS and x.arity == 2:
            items.append(_print(x.args[0], 999))
            x = x.args[1]
        if x == NIL:
            return "[" + ",".join(items) + "]"
        return "[" + ",".join(items) + "|" + _print(x, 999) + "]"
    if t.functor == "," and t.arity == 2:
        text = _print(t.args[0], 999) + "," + _print(t.args[1], 1000)
        return text if max_prec >= 1000 else "(" + text + ")"
    if t.functor == ":-" and t.arity == 2:
        text = _print(t.args[0], 1199) + " :- " + _print(t.args[1], 1199)
        return text if max_prec >= 1200 else "(" + text + ")"
    args = ",".join(_print(a, 999) for a in t.args)
    return f"{_atom_text(t.functor)}({args})"
