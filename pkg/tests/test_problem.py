import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disclosure import randgen
from disclosure.model import DepClass, Var, classify_all
from disclosure.problem import ParseError, dumps, from_setting, parse

DECLS = "source R/2\nsource S/1\nglobal T/1\n"


def test_hospital_shape(hospital_path):
    pf = parse(open(hospital_path).read())
    assert len(pf.schema.source) == 6
    assert len(pf.schema.globals_) == 3
    assert len(pf.constraints) == 2
    assert len(pf.mappings) == 3
    assert pf.policy.is_boolean
    assert classify_all(pf.constraints) >= {DepClass.LTGD}


def test_hospital_round_trip(hospital_path):
    pf = parse(open(hospital_path).read())
    text = dumps(pf)
    assert parse(text) == pf
    assert dumps(parse(text)) == text


def test_implicit_and_explicit_exists_agree():
    a = parse(DECLS + "constraint: R(x, y) -> S(z)\n")
    b = parse(DECLS + "constraint: R(x, y) -> exists z . S(z)\n")
    assert a == b


def test_policy_with_free_vars():
    pf = parse(DECLS + "policy: (x) R(x, y)\n")
    assert pf.policy.free == (Var("x"),)


@pytest.mark.parametrize(
    "text, fragment, line",
    [
        ("source IsCrit/1\n", "reserved", 1),
        (DECLS + "policy: IsCrit(x)\n", "reserved", 4),
        (DECLS + "mapping: T(x) := R(x, y)\nmapping: T(y) := S(y)\n", "already has a mapping", 5),
        (DECLS + "policy: Q(x)\n", "undeclared", 4),
        (DECLS + "policy: R(x)\n", "arity", 4),
        (DECLS + "constraint: T(x) -> S(x)\n", "may not appear", 4),
        (DECLS + "mapping: R(x, y) := R(x, y)\n", "may not appear", 4),
        (DECLS + "mapping: T(x) := S(y)\n", "missing from the body", 4),
        (DECLS + "constraint: R(x, y) -> exists w . S(z)\n", "exists lists", 4),
        (DECLS + "source R/3\n", "declared twice", 4),
        ("source R/2\n\n  frob R\n", "expected source", 3),
        ("source R/2\npolicy: R(x, y) $\n", "unexpected character", 2),
        (DECLS + "policy: R(x, y)\npolicy: S(x)\n", "more than one policy", 5),
    ],
)
def test_parse_errors(text, fragment, line):
    with pytest.raises(ParseError) as e:
        parse(text)
    assert fragment in str(e.value)
    assert e.value.line == line


def test_error_column_points_at_token():
    with pytest.raises(ParseError) as e:
        parse("source R/2\npolicy: Q(x)\n")
    assert (e.value.line, e.value.col) == (2, 9)


def test_comments_and_blank_lines_are_ignored():
    pf = parse("# a comment\n\n" + DECLS + "policy: S(x)  # trailing\n")
    assert len(pf.policy.atoms) == 1


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(randgen.FAMILIES)), st.integers(0, 10_000))
def test_generated_settings_round_trip(family, seed):
    pf = from_setting(randgen.FAMILIES[family](seed))
    assert parse(dumps(pf)) == pf
