from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mpdev.polynomial import ExactPolynomial as P

fracs = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)
polys = st.lists(fracs, max_size=6).map(P)


def test_normalization_and_degree():
    assert P([1, 2, 0, 0]).coeffs == (1, 2)
    assert P().degree == -1 and P([0, 0]) == P()
    assert P.monomial(3, 5).degree == 3
    assert P([1, 2]).coeff(7) == 0
    with pytest.raises(TypeError):
        P([0.5])


@given(polys, polys, polys)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == P()


@given(polys, polys, fracs)
def test_evaluation_is_a_homomorphism(a, b, z):
    assert (a * b)(z) == a(z) * b(z)
    assert (a + b)(z) == a(z) + b(z)


@given(polys, st.integers(0, 4))
def test_power(a, k):
    expected = P([1])
    for _ in range(k):
        expected = expected * a
    assert a ** k == expected


@given(polys)
def test_json_roundtrip(a):
    assert P.from_json(a.to_json()) == a


def test_float_evaluation_and_scale():
    p = P([Fraction(1, 2), 0, 3])
    assert p(2.0) == pytest.approx(12.5)
    assert p(Fraction(1, 3)) == Fraction(5, 6)
    assert p.scale(2) == P([1, 0, 6])
    assert p == P([Fraction(1, 2), 0, 3]) and hash(p) == hash(P([Fraction(1, 2), 0, 3]))
    assert P([4]) == 4
    assert "z^2" in repr(p)
