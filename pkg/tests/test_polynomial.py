from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brute import cube, peval
from levelqubo.polynomial import (
    Polynomial,
    all_values,
    from_values,
    integer_terms,
    multilinear_reduce,
    natural_key,
    product_of_shifts,
    rational_gcd,
    to_number,
)

X = ["x1", "x2", "x3", "x4"]


@st.composite
def polys(draw, names=X, max_terms=6):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        k = draw(st.lists(st.sampled_from(names), min_size=0, max_size=3, unique=True))
        num = draw(st.integers(-9, 9))
        den = draw(st.sampled_from([1, 1, 2, 3]))
        terms[tuple(k)] = terms.get(tuple(k), 0) + Fraction(num, den)
    return Polynomial(terms)


def test_idempotent_products():
    x = Polynomial.var("x")
    assert x * x == x
    assert (x + 1) ** 3 == 7 * x + 1


def test_text_form_round_trip():
    p = Polynomial.parse("2*x1*x2 - x1 + 1/2")
    assert str(p) == "+2*x1*x2 -x1 +1/2"
    assert Polynomial.parse(str(p)) == p
    assert str(Polynomial.zero()) == "0"


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        Polynomial.parse("2**x")
    with pytest.raises(ValueError):
        Polynomial.parse("x1 + $")


def test_natural_order():
    assert sorted(["x10", "x2", "x1"], key=natural_key) == ["x1", "x2", "x10"]
    p = Polynomial.parse("x10 + x2*x10 + x2")
    assert str(p) == "+x2*x10 +x2 +x10"


def test_to_number():
    assert to_number(Fraction(4, 2)) == 2 and isinstance(to_number(Fraction(4, 2)), int)
    assert to_number("3/6") == Fraction(1, 2)
    assert to_number(0.25) == Fraction(1, 4)


def test_rational_gcd():
    assert rational_gcd([Fraction(1, 2), Fraction(3, 4)]) == Fraction(1, 4)
    assert rational_gcd([12, -18]) == 6


def test_reduce_extracts_content():
    p = Polynomial.parse("12*x1*x2 - 12*x1*x3 + 12*x3")
    q, r = multilinear_reduce(p)
    assert r == 12 and str(q) == "+x1*x2 -x1*x3 +x3"
    assert multilinear_reduce(Polynomial.zero()) == (Polynomial.zero(), 1)


@given(polys())
@settings(max_examples=60, deadline=None)
def test_all_values_matches_pointwise(p):
    vals, den = all_values(p, X)
    for idx, a in enumerate(cube(X)):
        assert Fraction(int(vals[idx]), den) == peval(p, a)


@given(polys())
@settings(max_examples=60, deadline=None)
def test_interpolation_inverts_evaluation(p):
    vals, den = all_values(p, X)
    assert from_values([Fraction(int(v), den) for v in vals], X) == p


@given(polys(), polys())
@settings(max_examples=40, deadline=None)
def test_arithmetic_pointwise(p, q):
    for a in cube(X):
        assert peval(p * q, a) == peval(p, a) * peval(q, a)
        assert peval(p - q, a) == peval(p, a) - peval(q, a)


def test_restrict_and_substitute():
    p = Polynomial.parse("x1*x2 + 3*x2 - 1")
    assert p.restrict({"x2": 1}) == Polynomial.parse("x1 + 2")
    assert p.substitute({"x1": Polynomial.parse("1 - x3")}) == Polynomial.parse("-x2*x3 + 4*x2 - 1")


def test_integer_terms():
    terms, den = integer_terms(Polynomial.parse("1/2*x1 + 1/3"))
    assert den == 6 and terms == {("x1",): 3, (): 2}


@pytest.mark.parametrize("roots", [[0, 1], [-1, 0, 0, 1], [Fraction(1, 2), 2]])
def test_product_of_shifts_matches_expansion(roots):
    h = Polynomial.parse("x1 + 2*x2 - x3")
    expanded = Polynomial.const(1)
    for r in roots:
        expanded = expanded * (h - r)
    assert product_of_shifts(h, roots) == expanded
    assert product_of_shifts(h, roots, max_interp=0) == expanded


def test_values_use_int64_when_safe():
    vals, _ = all_values(Polynomial.parse("x1 + x2"))
    assert vals.dtype == np.int64
