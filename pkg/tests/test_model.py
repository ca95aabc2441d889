import pytest
from hypothesis import given
from hypothesis import strategies as st

from disclosure.model import (
    CRIT,
    DEP_ORDER,
    Atom,
    AuxNames,
    ConjunctiveQuery,
    Const,
    DepClass,
    Dependency,
    MapClass,
    MappingSet,
    Null,
    NullFactory,
    Var,
    atom,
    classify_all,
    classify_dependency,
    classify_mapping_rule,
    mapping_rule,
    normalize_heads,
    strongest,
    term_key,
)

ALL_DEP = {DepClass.UID, DepClass.INCDEP, DepClass.LTGD, DepClass.GTGD, DepClass.FGTGD, DepClass.TGD}


def dep(body, head, label=""):
    return Dependency(tuple(body), tuple(head), label)


@pytest.mark.parametrize(
    "d, expected",
    [
        (dep([atom("R", "x", "y")], [atom("S", "y", "z")]), ALL_DEP),
        (dep([atom("PatDoc", "p", "d")], [atom("PatSpec", "p", "s"), atom("DocSpec", "d", "s")]),
         {DepClass.LTGD, DepClass.GTGD, DepClass.FGTGD, DepClass.TGD}),
        (dep([atom("R", "x", "x")], [atom("S", "x", "z")]),
         {DepClass.LTGD, DepClass.GTGD, DepClass.FGTGD, DepClass.TGD}),
        (dep([atom("R", "x", "y"), atom("S", "y", "z")], [atom("U", "x", "z")]), {DepClass.TGD}),
        (dep([atom("R", "x", "y"), atom("S", "y", "z")], [atom("U", "y", "w")]),
         {DepClass.FGTGD, DepClass.TGD}),
        (dep([atom("R", "x", "y", "z"), atom("S", "y", "z")], [atom("U", "x")]),
         {DepClass.GTGD, DepClass.FGTGD, DepClass.TGD}),
    ],
)
def test_classify_dependency(d, expected):
    assert classify_dependency(d) == expected


def test_incdep_with_two_exports_is_not_uid():
    d = dep([atom("R", "x", "y")], [atom("S", "y", "x")])
    assert DepClass.INCDEP in classify_dependency(d)
    assert DepClass.UID not in classify_dependency(d)


def test_classify_all_intersects_and_strongest_picks_most_specific():
    ds = [dep([atom("R", "x", "y")], [atom("S", "y", "z")]),
          dep([atom("R", "x", "x")], [atom("S", "x", "z")])]
    assert strongest(classify_all(ds), DEP_ORDER) is DepClass.LTGD
    assert strongest(classify_all([]), DEP_ORDER) is DepClass.UID


@pytest.mark.parametrize(
    "head, body, strongest_class",
    [
        (atom("OpenHours", "b", "t"), [atom("IsOpen", "b", "t")], MapClass.PROJ),
        (atom("VisitingHours", "p", "t"), [atom("PatBdlg", "p", "b"), atom("IsOpen", "b", "t")], MapClass.CQMAP),
        (atom("T", "x"), [atom("R", "x", "x")], MapClass.ATOM),
        (atom("T", "x"), [atom("R", "x", "y", "z"), atom("S", "y")], MapClass.GUARDED),
    ],
)
def test_classify_mapping_rule(head, body, strongest_class):
    cs = classify_mapping_rule(mapping_rule(head, body))
    order = [MapClass.CQMAP, MapClass.GUARDED, MapClass.ATOM, MapClass.PROJ]
    assert strongest(cs, order) is strongest_class
    assert all(c in cs for c in order[: order.index(strongest_class) + 1])


def test_atom_mapping_is_not_projection():
    cs = classify_mapping_rule(mapping_rule(atom("T", "x"), [atom("R", "x", "x")]))
    assert MapClass.ATOM in cs and MapClass.PROJ not in cs


def test_normalize_heads_hospital_rule():
    d = dep([atom("PatBdlg", "p", "b")], [atom("PatDoc", "p", "d"), atom("DocBldg", "d", "b")], "c2")
    out = normalize_heads([d])
    aux = Atom("__aux1", (Var("p"), Var("b"), Var("d")))
    assert out == [
        Dependency((atom("PatBdlg", "p", "b"),), (aux,), "c2/aux"),
        Dependency((aux,), (atom("PatDoc", "p", "d"),), "c2/h1"),
        Dependency((aux,), (atom("DocBldg", "d", "b"),), "c2/h2"),
    ]


def test_normalize_heads_identity_cases():
    d = dep([atom("R", "x", "y")], [atom("S", "y", "z")])
    assert normalize_heads([d]) == [d]
    assert normalize_heads([]) == []


def test_aux_names_are_deterministic():
    a, b = AuxNames(), AuxNames()
    assert [a.fresh() for _ in range(3)] == [b.fresh() for _ in range(3)] == ["__aux1", "__aux2", "__aux3"]


def test_null_factory_is_per_instance():
    f, g = NullFactory(), NullFactory()
    assert f.fresh() == g.fresh() == Null(1)
    assert f.fresh() == Null(2)


def test_query_rejects_constants_and_unbound_free_vars():
    with pytest.raises(ValueError):
        ConjunctiveQuery((Atom("R", (Const("a"), Var("x"))),))
    with pytest.raises(ValueError):
        ConjunctiveQuery((atom("R", "x"),), (Var("y"),))


def test_mapping_set_needs_one_rule_per_global():
    r = mapping_rule(atom("T", "x"), [atom("R", "x", "y")])
    with pytest.raises(ValueError):
        MappingSet([r, mapping_rule(atom("T", "x"), [atom("S", "x")])])


terms = st.one_of(
    st.text("abc", min_size=1, max_size=3).map(Const),
    st.text("xyz", min_size=1, max_size=3).map(Var),
    st.integers(1, 50).map(Null),
    st.just(CRIT),
)


@given(st.lists(terms, max_size=12))
def test_term_key_is_a_total_order(ts):
    keys = [term_key(t) for t in ts]
    assert sorted(ts, key=term_key) == sorted(sorted(ts, key=term_key, reverse=True), key=term_key)
    assert len(set(keys)) == len(set(ts))


@given(st.lists(st.text("xyzuv", min_size=1, max_size=2), min_size=1, max_size=4))
def test_atom_subst_replaces_only_mapped_vars(names):
    a = atom("R", *names)
    sub = {Var(names[0]): CRIT}
    b = a.subst(sub)
    assert all((t == CRIT) if n == names[0] else t == Var(n) for n, t in zip(names, b.args))
