import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disclosure import hardgen
from disclosure.engine import (
    ChaseBudget,
    ChaseStatus,
    FactStore,
    Status,
    build_chase_forest,
    chase,
    entails,
    eval_cq,
    holds,
    iter_matches,
    satisfies,
)
from disclosure.model import CRIT, ISCRIT, Atom, ConjunctiveQuery, Const, Dependency, Null, Var, atom

a, b, c, d = (Const(n) for n in "abcd")


def fact(pred, *vals):
    return Atom(pred, tuple(vals))


def rule(body, head, label=""):
    return Dependency(tuple(body), tuple(head), label)


def cq(*atoms, free=()):
    return ConjunctiveQuery(tuple(atoms), tuple(Var(v) for v in free))


def test_single_match():
    assert eval_cq([fact("R", a, b)], cq(atom("R", "x", "y"), free="xy")) == [{Var("x"): a, Var("y"): b}]


def test_repeated_variable_needs_equal_values():
    assert not holds([fact("R", a, b)], cq(atom("R", "x", "x")))
    assert holds([fact("R", a, a)], cq(atom("R", "x", "x")))


def test_eval_cq_enumerates_all_homomorphisms_in_value_order():
    db = [fact("R", b, a), fact("R", a, c), fact("R", a, b)]
    rows = eval_cq(db, cq(atom("R", "x", "y")))
    x, y = Var("x"), Var("y")
    assert rows == [{x: a, y: b}, {x: a, y: c}, {x: b, y: a}]


def test_guard_prunes_partial_bindings():
    db = [fact("R", a, b), fact("R", b, b)]
    ms = list(iter_matches(db, [atom("R", "x", "y")], guard=lambda h, v: h.get(Var("x")) != a))
    assert ms == [{Var("x"): b, Var("y"): b}]


def test_circuit_instance_satisfies_tautology_query():
    c = hardgen.Circuit.parse("o=OR(2, NOT 2)")
    assert holds(hardgen.circuit_instance(), hardgen.circuit_query(c))


def test_fact_store_substitution_merges_duplicates():
    s = FactStore([fact("R", a, b), fact("R", a, c)])
    t = s.substituted({c: b})
    assert list(t) == [fact("R", a, b)]
    assert len(s) == 2


def test_chase_one_step():
    res = chase([fact("A", c)], [rule([atom("A", "x")], [atom("R", "x", "y")])], ChaseBudget(2))
    assert res.status is ChaseStatus.SATURATED
    assert set(res.instance) == {fact("A", c), fact("R", c, Null(1))}


def test_restriction_suppresses_satisfied_trigger():
    db = [fact("A", c), fact("R", c, d)]
    res = chase(db, [rule([atom("A", "x")], [atom("R", "x", "y")])])
    assert res.saturated and set(res.instance) == set(db)
    assert res.trace == []


def test_budget_exhaustion_after_three_generations():
    deps = [rule([atom("R", "x", "y")], [atom("S", "y", "z")], "r"),
            rule([atom("S", "x", "y")], [atom("R", "y", "z")], "s")]
    res = chase([fact("R", a, b)], deps, ChaseBudget(max_rounds=3))
    assert res.status is ChaseStatus.BUDGET_EXHAUSTED
    assert res.rounds == 3
    assert {n for f in res.instance for n in f.args if isinstance(n, Null)} == {Null(1), Null(2), Null(3)}


def test_max_facts_stops_the_chase():
    deps = [rule([atom("R", "x", "y")], [atom("R", "y", "z")])]
    res = chase([fact("R", a, b)], deps, ChaseBudget(max_rounds=100, max_facts=5))
    assert res.status is ChaseStatus.BUDGET_EXHAUSTED
    assert len(res.instance) == 5


def test_round_uses_snapshot_triggers():
    # the fact made by the first rule must wait a round before feeding the second
    deps = [rule([atom("A", "x")], [atom("B", "x")]), rule([atom("B", "x")], [atom("C", "x")])]
    res = chase([fact("A", a)], deps, ChaseBudget(max_rounds=1))
    assert fact("C", a) not in res.instance
    assert res.status is ChaseStatus.BUDGET_EXHAUSTED


def test_entails_positive_and_negative():
    v = entails([fact("A", c)], [rule([atom("A", "x")], [atom("R", "x", "y")])], cq(atom("R", "x", "y")))
    assert v.status is Status.ENTAILED and v.witness[Var("x")] == c
    v = entails([fact("A", c)], [], cq(atom("B", "x")))
    assert v.status is Status.NOT_ENTAILED and v.rounds <= 1


def test_entails_unknown_when_budget_runs_out():
    deps = [rule([atom("R", "x", "y")], [atom("R", "y", "z")])]
    v = entails([fact("R", a, b)], deps, cq(atom("S", "x")), ChaseBudget(max_rounds=4))
    assert v.status is Status.UNKNOWN and "4 rounds" in v.reason


def test_entailment_rejects_free_queries():
    with pytest.raises(ValueError):
        entails([], [], cq(atom("R", "x", "y"), free="x"))


def test_satisfies():
    d1 = rule([atom("A", "x")], [atom("R", "x", "y")])
    assert satisfies([fact("A", a), fact("R", a, b)], [d1])
    assert not satisfies([fact("A", a)], [d1])


def test_budget_rejects_negative_values():
    with pytest.raises(ValueError):
        ChaseBudget(-1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("abc")), min_size=1, max_size=6))
def test_saturated_chase_is_a_model(edges):
    db = [fact("E", Const(x), Const(y)) for x, y in edges]
    deps = [rule([atom("E", "x", "y")], [atom("F", "y", "z")]),
            rule([atom("F", "x", "y"), atom("E", "x", "w")], [atom("G", "w")])]
    res = chase(db, deps)
    assert res.saturated
    assert satisfies(res.instance, deps)
    assert set(db) <= set(res.instance)


# chase forests over binary schemas

def test_forest_single_child():
    f = build_chase_forest([fact(ISCRIT, CRIT)], [rule([atom(ISCRIT, "x")], [atom("R1", "y", "x")])])
    assert f.roots == [CRIT]
    assert f.children(CRIT) == [Null(1)]
    assert f.edges == [(CRIT, Null(1), fact("R1", Null(1), CRIT))]
    assert f.labels[CRIT] == {ISCRIT}


def test_frontier_zero_rule_starts_a_new_tree():
    deps = [rule([atom(ISCRIT, "x")], [atom("RE", "t")])]
    f = build_chase_forest([fact(ISCRIT, CRIT)], deps)
    assert f.roots == [CRIT, Null(1)]
    assert f.children(CRIT) == []


def test_forest_prefix_of_cyclic_uids():
    deps = [rule([atom("R", "x", "y")], [atom("S", "y", "z")]),
            rule([atom("S", "x", "y")], [atom("R", "y", "z")])]
    f = build_chase_forest([fact("R", a, b)], deps, ChaseBudget(max_rounds=3))
    assert f.status is ChaseStatus.BUDGET_EXHAUSTED
    assert f.adjoining_violations() == []
    assert f.children(b) == [Null(1)]
    assert f.children(Null(1)) == [Null(2)]
    assert f.children(Null(2)) == [Null(3)]


def test_forest_rejects_wide_predicates():
    with pytest.raises(ValueError):
        build_chase_forest([fact("R", a, b, c)], [])


def test_forest_asserts_unique_adjoining_labels():
    with pytest.raises(AssertionError):
        build_chase_forest([fact("R", a, b), fact("R", a, c)], [])
