import pytest

from tracedd.dataset import load_dataset

SAMPLE_TRACE = """\
query((atom(X,'c')), [1,2,3,4,5]).
query((atom(X,'h')), [1,2,3,4,5]).

query((atom(X,'c'),atom(Y,'o'),bond(X,Y)), [1,5]).
query((atom(X,'c'),atom(Y,'c'),bond(X,Y)), [1,5]).
"""

# Five small molecules for the sample queries.
SAMPLE_EXAMPLES = """\
begin(model(1)).
atom(a1,'c'). atom(a2,'o'). bond(a1,a2). bond(a2,a1).
end(model(1)).
begin(model(2)).
atom(b1,'h').
end(model(2)).
begin(model(3)).
atom(c1,'c'). atom(c2,'h'). bond(c1,c2). bond(c2,c1).
end(model(3)).
begin(model(4)).
atom(d1,'n').
end(model(4)).
begin(model(5)).
atom(e1,'c'). atom(e2,'c'). bond(e1,e2). bond(e2,e1).
end(model(5)).
"""


@pytest.fixture
def sample_text():
    return SAMPLE_TRACE


@pytest.fixture
def sample_dataset():
    return load_dataset(SAMPLE_EXAMPLES)


# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
