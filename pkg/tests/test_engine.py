import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracedd.dataset import Dataset, Example, load_dataset
from tracedd.engine import (
    CRASH,
    BudgetExhausted,
    Effect,
    EngineConfig,
    FaultSpec,
    OutcomeKind,
    ResultMemo,
    apply_fault,
    evaluate_query,
    parse_fault_spec,
    parse_log,
    print_fault_spec,
    print_log,
    query_matches,
    simulate,
)
from tracedd.term import Constant, conjuncts, parse_term
from tracedd.trace import QueryUid, parse_trace

from oracles import brute_force_holds, query_grid, random_examples


def q(text):
    return conjuncts(parse_term(text))


def test_grid_agrees_with_brute_force():
    examples = random_examples(4, seed=1)
    queries = list(query_grid(2))
    for ex in examples:
        for query in queries:
            assert evaluate_query(query, ex) == brute_force_holds(query, ex), (query, ex.facts)


def test_sample_results(sample_dataset):
    ex1 = sample_dataset.examples[Constant(1)]
    ex5 = sample_dataset.examples[Constant(5)]
    co = q("atom(X,'c'), atom(Y,'o'), bond(X,Y)")
    assert evaluate_query(co, ex1)
    assert not evaluate_query(co, ex5)
    assert evaluate_query(q("atom(X,'c'), atom(Y,'c'), bond(X,Y)"), ex5)


def test_background_recursion():
    d = load_dataset(
        "begin(model(1)).\nedge(a,b). edge(b,c). edge(c,d).\nend(model(1)).\n",
        "path(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).\n",
    )
    ex = d.examples[Constant(1)]
    assert evaluate_query(q("path(a,d)"), ex, d)
    assert not evaluate_query(q("path(d,a)"), ex, d)
    assert evaluate_query(q("path(b,X), edge(X,d)"), ex, d)


def test_empty_query_succeeds():
    assert evaluate_query((), Example(Constant(1), ()))


def test_left_recursion_exhausts_budget():
    d = load_dataset("begin(model(1)).\nedge(a,b).\nend(model(1)).\n", "loop(X) :- loop(X).\n")
    with pytest.raises(BudgetExhausted):
        evaluate_query(q("loop(a)"), d.examples[Constant(1)], d, EngineConfig(depth_budget=50))
    with pytest.raises(BudgetExhausted):
        evaluate_query(q("loop(a)"), d.examples[Constant(1)], d, EngineConfig(step_budget=30))


def test_query_matches_by_unification():
    query = q("atom(X,'c'), marker(trigger)")
    assert query_matches(parse_term("marker(trigger)"), query)
    assert query_matches(parse_term("atom(_, 'c')"), query)
    assert not query_matches(parse_term("atom(_, 'o')"), query)


def test_flip_needs_every_arm_first():
    fault = FaultSpec(parse_term("t"), Effect.CORRUPT_THEN_FLIP, (parse_term("a1"), parse_term("a2")))
    cfg = EngineConfig(fault)
    trig = (parse_term("t"),)
    assert apply_fault(cfg, trig, True) == (True, frozenset())
    _, st1 = apply_fault(cfg, (parse_term("a1"),), True)
    assert apply_fault(cfg, trig, True, st1)[0] is True
    _, st2 = apply_fault(cfg, (parse_term("a2"),), False, st1)
    assert apply_fault(cfg, trig, True, st2)[0] is False


def test_trigger_checked_before_arming():
    fault = FaultSpec(parse_term("t"), Effect.FLIP_RESULT, (parse_term("t"),))
    cfg = EngineConfig(fault)
    res, state = apply_fault(cfg, (parse_term("t"),), True)
    assert res is True and state == frozenset({0})
    assert apply_fault(cfg, (parse_term("t"),), True, state)[0] is False


def test_crash_effect():
    cfg = EngineConfig(FaultSpec(parse_term("t"), Effect.CRASH))
    assert apply_fault(cfg, (parse_term("t"),), True)[0] is CRASH
    assert apply_fault(cfg, (parse_term("u"),), True)[0] is True


def test_corrupt_then_flip_requires_arms():
    with pytest.raises(ValueError):
        FaultSpec(parse_term("t"), Effect.CORRUPT_THEN_FLIP)


def test_simulate_sample(sample_text, sample_dataset):
    trace = parse_trace(sample_text)
    report = simulate(trace, sample_dataset)
    assert report.outcome.kind is OutcomeKind.COMPLETED
    assert len(report.log) == 14
    assert report.log.entries[0] == (QueryUid(1, 1), Constant(1), True)
    assert parse_log(print_log(report.log)) == report.log
    assert print_log(report.log).splitlines()[1] == "run(q(1,1), 2, false)."


def test_crash_truncates_log(sample_text, sample_dataset):
    trace = parse_trace(sample_text)
    cfg = EngineConfig(FaultSpec(parse_term("atom(_,'h')"), Effect.CRASH))
    report = simulate(trace, sample_dataset, cfg)
    assert report.outcome.kind is OutcomeKind.CRASHED
    assert (report.outcome.uid, report.outcome.example_id) == (QueryUid(1, 2), Constant(1))
    assert len(report.log) == 5
    assert str(report.outcome) == "crashed(q(1,2),1)"


def test_unknown_example_raises(sample_dataset):
    from tracedd.dataset import UnknownExample

    with pytest.raises(UnknownExample):
        simulate(parse_trace("query((p(X)), [1,9]).\n"), sample_dataset)


def test_fault_spec_text_round_trip():
    text = "fault(arm([marker(arm1),marker(arm2)]), trigger(marker(trigger)), effect(corrupt_then_flip)).\n"
    f = parse_fault_spec(text)
    assert f.arms == (parse_term("marker(arm1)"), parse_term("marker(arm2)"))
    assert print_fault_spec(f) == text
    one = parse_fault_spec("fault(arm(none), trigger(t), effect(crash)).")
    assert one.arms == () and one.effect is Effect.CRASH
    for bad in ["fault(trigger(t)).", "fault(trigger(t), effect(boom)).", "fault(trigger(X), effect(crash)).", "f."]:
        with pytest.raises(ValueError):
            parse_fault_spec(bad)


def test_result_memo_matches_direct_evaluation(sample_text, sample_dataset):
    trace = parse_trace(sample_text)
    memo = ResultMemo()
    first = simulate(trace, sample_dataset, memo=memo)
    assert len(memo.table) == 14
    assert simulate(trace, sample_dataset, memo=memo) == first


@st.composite
def _crash_prefix_case(draw):
    n = draw(st.integers(1, 20))
    ids = list(range(1, 4))
    lines = []
    for k in range(n):
        pred = draw(st.sampled_from(["p(X)", "q(X)", "p(X), q(X)", "t"]))
        picked = draw(st.lists(st.sampled_from(ids), min_size=1, max_size=3, unique=True))
        lines.append(f"query(({pred}), [{','.join(map(str, picked))}]).")
    return "\n".join(lines) + "\n"


_PQ = Dataset.from_examples(
    Example(Constant(k), tuple(parse_term(f) for f in facts))
    for k, facts in [(1, ["p(a)"]), (2, ["q(b)", "p(b)"]), (3, ["t"])]
)


@settings(max_examples=100, deadline=None)
@given(_crash_prefix_case())
def test_crash_log_is_a_prefix_of_the_clean_log(text):
    trace = parse_trace(text)
    clean = simulate(trace, _PQ)
    crashed = simulate(trace, _PQ, EngineConfig(FaultSpec(parse_term("t"), Effect.CRASH)))
    assert clean.log.entries[: len(crashed.log)] == crashed.log.entries
    assert simulate(trace, _PQ) == clean
