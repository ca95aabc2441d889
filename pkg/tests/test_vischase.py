import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disclosure import randgen
from disclosure.engine import ChaseBudget, ChaseStatus, FactStore, Status, chase, holds
from disclosure.model import (
    CRIT,
    ISCRIT,
    Atom,
    ConjunctiveQuery,
    Const,
    Dependency,
    MappingSet,
    Var,
    atom,
    mapping_rule,
    normalize_heads,
)
from disclosure.report import witness_holds
from disclosure.vischase import (
    VisibleChase,
    critical_instance,
    crit_fact,
    disclose_via_vischase,
    hide,
    merge_fixpoint,
    oracle_disclose,
    sceq_rules,
    visible_chase,
)


def q(*atoms):
    return ConjunctiveQuery(tuple(atoms))


def test_critical_instance():
    assert list(critical_instance([("T", 2)])) == [Atom("T", (CRIT, CRIT))]
    assert len(critical_instance([])) == 0
    assert len(critical_instance([("T", 1), ("U", 3)])) == 2


def test_hide_visiting_hours():
    m = MappingSet([mapping_rule(atom("VisitingHours", "p", "t"), [atom("PatBdlg", "p", "b"), atom("IsOpen", "b", "t")])])
    cb = Const("c_b")
    assert list(hide(m)) == [Atom("PatBdlg", (CRIT, cb)), Atom("IsOpen", (cb, CRIT))]


def test_hide_single_atom(proj_rxy):
    assert list(hide(proj_rxy)) == [Atom("R", (CRIT, Const("c_y")))]


def test_hide_uses_fresh_constants_per_rule():
    m = MappingSet([mapping_rule(atom("T", "x"), [atom("R", "x", "y")]),
                    mapping_rule(atom("U", "x"), [atom("R", "y", "x")])])
    assert list(hide(m)) == [Atom("R", (CRIT, Const("c_y"))), Atom("R", (Const("c_y_2"), CRIT))]


def test_no_merge_without_a_crit_trigger(proj_rxy):
    state, status = visible_chase([], proj_rxy)
    assert status is ChaseStatus.SATURATED
    assert set(state.instance) == {Atom("R", (CRIT, Const("c_y"))), crit_fact()}
    assert state.merged == {}


def test_repeated_body_variable_needs_no_merge_at_round_zero():
    m = MappingSet([mapping_rule(atom("T", "x"), [atom("R", "x", "y", "y")])])
    vc = VisibleChase([], m)
    assert vc.merged == {}
    assert Atom("R", (CRIT, Const("c_y"), Const("c_y"))) in vc.store


def test_merges_collapse_values_onto_crit():
    # S(y, x) is created for the hidden R fact; T reads S's second column, so
    # the null is merged into the critical constant
    m = MappingSet([mapping_rule(atom("T", "x"), [atom("R", "x", "y")]),
                    mapping_rule(atom("U", "z"), [atom("S", "y", "z")])])
    sigma = [Dependency((atom("R", "x", "y"),), (atom("S", "y", "w"),), "s")]
    state, status = visible_chase(sigma, m)
    assert status is ChaseStatus.SATURATED
    assert Atom("S", (Const("c_y"), CRIT)) in state.instance
    assert list(state.merged.values()) == [CRIT]


def test_hospital_disclosed_within_four_rounds(hospital):
    v = disclose_via_vischase(hospital.sigma, hospital.mappings, hospital.policy)
    assert v.status is Status.DISCLOSED
    assert v.rounds <= 4
    assert witness_holds(v)
    assert all(v.witness[x] == CRIT for x in v.witness if x.name == "p")


def test_hospital_without_constraints_not_disclosed(hospital):
    v = disclose_via_vischase((), hospital.mappings, hospital.policy)
    assert v.status is Status.NOT_DISCLOSED


@pytest.mark.parametrize(
    "policy, expected",
    [
        (q(atom("S", "x")), Status.NOT_DISCLOSED),
        (q(atom("R", "x", "y")), Status.DISCLOSED),
    ],
)
@pytest.mark.parametrize("algo", [disclose_via_vischase, oracle_disclose])
def test_single_projection(proj_rxy, policy, expected, algo):
    assert algo((), proj_rxy, policy).status is expected


def test_oracle_agrees_on_hospital(hospital):
    assert oracle_disclose(hospital.sigma, hospital.mappings, hospital.policy).status is Status.DISCLOSED
    assert oracle_disclose((), hospital.mappings, hospital.policy).status is Status.NOT_DISCLOSED


def test_policy_must_be_boolean_and_source_only(proj_rxy):
    with pytest.raises(ValueError):
        disclose_via_vischase((), proj_rxy, ConjunctiveQuery((atom("R", "x", "y"),), (Var("x"),)))
    with pytest.raises(ValueError):
        disclose_via_vischase((), proj_rxy, q(atom("T", "x")))


def test_unknown_on_budget_exhaustion():
    m = MappingSet([mapping_rule(atom("T", "x"), [atom("R", "x", "y")])])
    sigma = [Dependency((atom("R", "x", "y"),), (atom("R", "y", "z"),), "grow")]
    v = disclose_via_vischase(sigma, m, q(atom("S", "x")), ChaseBudget(max_rounds=3))
    assert v.status is Status.UNKNOWN
    assert "3 rounds" in v.reason


def _shuffled_fixpoint(setting, seed):
    # merge an unmerged two-round chase so that several merges are pending at once
    rules = sceq_rules(setting.mappings)
    random.Random(seed).shuffle(rules)
    base = list(hide(setting.mappings)) + [crit_fact()]
    pre = chase(base, normalize_heads(setting.sigma), ChaseBudget(max_rounds=2, max_facts=2000))
    out, _ = merge_fixpoint(FactStore(pre.instance), rules)
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 50))
def test_merge_fixpoint_is_order_independent_and_idempotent(seed, perm):
    s = randgen.general(seed)
    a = _shuffled_fixpoint(s, 0)
    b = _shuffled_fixpoint(s, perm)
    assert set(a) == set(b)
    again, merged = merge_fixpoint(a, sceq_rules(s.mappings))
    assert merged == {} and set(again) == set(a)


def test_disclosed_witness_holds_in_state(hospital):
    v = disclose_via_vischase(hospital.sigma, hospital.mappings, hospital.policy)
    assert holds(v.certificate.instance, hospital.policy)
    assert Atom(ISCRIT, (CRIT,)) in v.certificate.instance
