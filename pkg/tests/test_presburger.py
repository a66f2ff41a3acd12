import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderpp.errors import ParseError, UnboundVariable
from orderpp.presburger import (
    FALSE, TRUE, Not, congruence, conj, disj, eval_presburger, linear, minus, parse_formula,
    render_formula, sum_of,
)

VARS = ("x", "y", "z")


def test_linear_and_congruence():
    f = linear({"x": 2, "y": -1}, ">=", 1)
    assert eval_presburger(f, {"x": 1, "y": 1})
    assert not eval_presburger(f, {"x": 0, "y": 0})
    g = congruence({"x": 1}, 3, 5)
    assert g.residue == 2
    assert eval_presburger(g, {"x": 8}) and not eval_presburger(g, {"x": 7})


def test_builders():
    assert sum_of("a", "b", "a") == {"a": 2, "b": 1}
    assert minus({"a": 1}, {"a": 1, "b": 2}) == {"a": 0, "b": -2}
    # zero coefficients drop out
    assert linear(minus({"a": 1}, {"a": 1}), "=", 0).coeffs == ()
    with pytest.raises(ValueError):
        linear({"x": 1}, "!=", 0)
    with pytest.raises(ValueError):
        congruence({"x": 1}, 1, 0)


def test_boolean_structure():
    f = conj(linear({"x": 1}, ">", 0), Not(linear({"y": 1}, "=", 2)))
    assert eval_presburger(f, {"x": 1, "y": 3})
    assert not eval_presburger(f, {"x": 1, "y": 2})
    assert eval_presburger(disj(FALSE, TRUE), {})
    assert eval_presburger(conj(), {}) and not eval_presburger(disj(), {})
    assert f.variables() == {"x", "y"}


def test_unbound_variable():
    with pytest.raises(UnboundVariable) as e:
        eval_presburger(linear({"q": 1}, "=", 0), {})
    assert e.value.details["variable"] == "q"


def test_parse_examples():
    f = parse_formula("(and (>= (+ x (* 2 y)) 3) (mod 2 x 1) (not (= (- x y) 0)))")
    assert eval_presburger(f, {"x": 1, "y": 2})
    assert not eval_presburger(f, {"x": 2, "y": 2})
    assert parse_formula("true") == TRUE
    assert eval_presburger(parse_formula("(< (- x) -2)"), {"x": 3})
    # constants on either side move into the bound
    assert parse_formula("(<= (+ x 1) y)") == linear({"x": 1, "y": -1}, "<=", -1)


@pytest.mark.parametrize("text", ["", "(and", "(foo x)", "(< x)", "(* x y)", "(mod 1 x 0)",
                                  "(< 1x 2)", "x", "(< x 1) extra"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_formula(text)


terms = st.dictionaries(st.sampled_from(VARS), st.integers(-3, 3), max_size=3)
atoms = st.one_of(
    st.builds(linear, terms, st.sampled_from(["<", "<=", "=", ">=", ">"]), st.integers(-4, 4)),
    st.builds(congruence, terms, st.integers(2, 4), st.integers(0, 3)),
    st.sampled_from([TRUE, FALSE]),
)
formulas = st.recursive(atoms, lambda sub: st.one_of(
    st.lists(sub, max_size=3).map(lambda xs: conj(*xs)),
    st.lists(sub, max_size=3).map(lambda xs: disj(*xs)),
    sub.map(Not)), max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(formulas)
def test_render_parse_roundtrip(f):
    g = parse_formula(render_formula(f))
    for vals in itertools.product(range(-2, 3), repeat=3):
        value = dict(zip(VARS, vals))
        assert eval_presburger(g, value) == eval_presburger(f, value)
    assert render_formula(g) == render_formula(f)
