import pytest
from hypothesis import given, settings

from tracedd.dataset import (
    DatasetError,
    UnknownExample,
    load_dataset,
    load_dataset_files,
    lookup_example,
    print_background,
    print_examples,
)
from tracedd.term import Constant, parse_term

from strategies import datasets


def test_blocks_and_index(sample_dataset):
    d = sample_dataset
    assert [x.value for x in d.ids()] == [1, 2, 3, 4, 5]
    ex = lookup_example(d, Constant(1))
    assert ex.facts_for(("bond", 2)) == (parse_term("bond(a1,a2)"), parse_term("bond(a2,a1)"))
    assert ex.facts_for(("missing", 1)) == ()


def test_unknown_example(sample_dataset):
    with pytest.raises(UnknownExample) as exc:
        lookup_example(sample_dataset, Constant(9))
    assert exc.value.example_id == Constant(9)


def test_background_clauses():
    d = load_dataset("begin(model(m)).\np(a).\nend(model(m)).\n", "q(X) :- p(X).\nr(b).\n")
    assert [c.is_fact for c in d.background] == [False, True]
    assert d.clauses_for(("q", 1))[0].head == parse_term("q(X)")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "no examples"),
        ("begin(model(1)).\natom(X,'c').\nend(model(1)).\n", "non-ground"),
        ("begin(model(1)).\natom(a,'c').\n", "unterminated"),
        ("begin(model(1)).\nend(model(1)).\nbegin(model(1)).\nend(model(1)).\n", "duplicate"),
        ("atom(a,'c').\n", "outside"),
        ("begin(model(1)).\np(X) :- q(X).\nend(model(1)).\n", "rules"),
        ("begin(model(1)).\nend(model(2)).\n", "without matching begin"),
    ],
)
def test_rejects_malformed_examples(text, fragment):
    with pytest.raises(DatasetError, match=fragment):
        load_dataset(text)


def test_load_from_files(tmp_path):
    ex = tmp_path / "ex.pl"
    bg = tmp_path / "bg.pl"
    ex.write_text("begin(model(1)).\np(a).\nend(model(1)).\n")
    bg.write_text("q(X) :- p(X).\n")
    d = load_dataset_files(str(ex), str(bg))
    assert len(d.background) == 1
    with pytest.raises(OSError):
        load_dataset_files(str(tmp_path / "nope.pl"))


@settings(max_examples=150, deadline=None)
@given(datasets())
def test_print_load_round_trip(d):
    again = load_dataset(print_examples(d), print_background(d))
    assert again == d
    assert print_examples(again) == print_examples(d)
