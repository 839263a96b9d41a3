"""Independent reference implementations used as test oracles."""

import itertools
import random

from tracedd.dataset import Dataset, Example
from tracedd.term import Compound, Constant, Variable, resolve, variables_of

CONSTANTS = [Constant(c) for c in "abcdef"]


def brute_force_holds(query, example):
    """Enumerate every assignment of the query's variables to the example's
    constants and check each atom against the fact set directly."""
    facts = set(example.facts)
    names = sorted({v for atom in query for v in variables_of(atom)})
    universe = sorted(
        {a for f in example.facts for a in f.args} | {a for atom in query for a in atom.args if isinstance(a, Constant)},
        key=lambda c: str(c.value),
    )
    for values in itertools.product(universe, repeat=len(names)):
        s = dict(zip(names, values))
        if all(resolve(atom, s) in facts for atom in query):
            return True
    return not names and all(atom in facts for atom in query)


def atom_grid():
    """Every p/2 and q/1 atom over two variables and one constant."""
    args = [Variable("X"), Variable("Y"), Constant("a")]
    atoms = [Compound("p", (x, y)) for x in args for y in args]
    atoms += [Compound("q", (x,)) for x in args]
    return atoms


def query_grid(max_atoms=3):
    atoms = atom_grid()
    for k in range(1, max_atoms + 1):
        yield from itertools.product(atoms, repeat=k)


def random_examples(n, seed=0, n_constants=6):
    rng = random.Random(seed)
    out = []
    for k in range(n):
        consts = CONSTANTS[: rng.randint(1, n_constants)]
        facts = set()
        for _ in range(rng.randint(0, 10)):
            if rng.random() < 0.7:
                facts.add(Compound("p", (rng.choice(consts), rng.choice(consts))))
            else:
                facts.add(Compound("q", (rng.choice(consts),)))
        out.append(Example(Constant(k), tuple(sorted(facts, key=str))))
    return out


def superset_oracle(required):
    from tracedd.ddmin import TestOutcome

    required = frozenset(required)

    def test(units):
        return TestOutcome.FAIL if required <= set(units) else TestOutcome.PASS

    return test


__all__ = ["brute_force_holds", "query_grid", "random_examples", "superset_oracle", "Dataset"]
