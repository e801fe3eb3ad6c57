from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from flopqlh.exactalg import (
    CoeffElem,
    RatFuncQ1,
    UPoly,
    f_basic,
    laurent_at,
    partial_fractions,
    polynomial_part,
    reg_value,
    substitute_inverse,
)

x = sympy.Symbol("x")
small = st.integers(-6, 6)
coeffs = st.lists(small, min_size=1, max_size=5)


def to_sym(p: UPoly):
    return sum(sympy.Rational(c.numerator, c.denominator) * x**k for k, c in enumerate(p.c))


def rat_sym(f: RatFuncQ1):
    return to_sym(f.num) / to_sym(f.den)


@given(coeffs, coeffs)
def test_upoly_ring_matches_sympy(a, b):
    A, B = UPoly(a), UPoly(b)
    assert sympy.expand(to_sym(A * B) - to_sym(A) * to_sym(B)) == 0
    assert sympy.expand(to_sym(A + B) - to_sym(A) - to_sym(B)) == 0


@given(coeffs, coeffs.filter(lambda c: any(c)))
def test_divmod_identity(a, b):
    A, B = UPoly(a), UPoly(b)
    q, r = A.divmod(B)
    assert q * B + r == A
    assert r.is_zero() or r.deg < B.deg


@given(coeffs, coeffs.filter(lambda c: any(c)))
def test_ratfunc_is_reduced_with_monic_denominator(a, b):
    f = RatFuncQ1(UPoly(a), UPoly(b))
    assert f.den.lead() == 1
    assert sympy.simplify(rat_sym(f) - to_sym(UPoly(a)) / to_sym(UPoly(b))) == 0


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_f_basic_reflection(r):
    # f(q) + f(1/q) = (-1)^r
    f = f_basic(r)
    assert (f + substitute_inverse(f)) == RatFuncQ1.const((-1) ** r)


def test_f_basic_rejects_r0():
    with pytest.raises(ValueError):
        f_basic(0)


def test_theta_is_q_derivative():
    f = f_basic(1)
    q = sympy.Symbol("q")
    want = sympy.simplify(q * sympy.diff(q / (1 - q), q))
    got = rat_sym(f.theta()).subs(x, q)
    assert sympy.simplify(got - want) == 0


def test_laurent_series_of_f():
    # q/(1-q) = q + q^2 + ...
    lau = f_basic(1).laurent(5)
    assert [lau.get(k, 0) for k in range(6)] == [0, 1, 1, 1, 1, 1]


@given(coeffs, st.lists(st.integers(-3, 3), min_size=1, max_size=3))
@settings(max_examples=60)
def test_partial_fractions_against_apart(num, roots):
    den = UPoly([1])
    for e in roots:
        den = den * UPoly([-e, 1])
    f = RatFuncQ1(UPoly(num), den)
    parts = partial_fractions(f, sorted(set(roots)))
    rebuilt = to_sym(polynomial_part(f)) + sum(
        sympy.Rational(c.numerator, c.denominator) / (x - sympy.Rational(e.numerator, e.denominator)) ** k
        for e, part in parts.items()
        for k, c in part.items()
    )
    assert sympy.simplify(rebuilt - rat_sym(f)) == 0


def test_partial_fractions_rejects_missing_pole():
    f = RatFuncQ1(UPoly([1]), UPoly([-2, 1]))
    with pytest.raises(ValueError):
        partial_fractions(f, [0])


def test_laurent_at_pole():
    # 1/(x (x-1)) near 0: -1/x - 1 - x - ...
    f = RatFuncQ1(UPoly([1]), UPoly([0, -1, 1]))
    lau = laurent_at(f, 0, 2)
    assert lau == {-1: -1, 0: -1, 1: -1, 2: -1}
    assert reg_value(f, 0) == -1


def test_coeffelem_flop_substitution_is_involutive_on_q1():
    c = CoeffElem.monomial(0, 0, (), f_basic(1), 0)
    back = c.subs_flop()
    # q1 -> 1/q1 turns q1/(1-q1) into 1/(q1-1)
    assert back == CoeffElem.monomial(0, 0, (), RatFuncQ1(UPoly([1]), UPoly([-1, 1])), 0)


def test_coeffelem_arithmetic():
    a = CoeffElem.monomial(1, 0, (1,), 2, 1)
    b = CoeffElem.monomial(0, 1, (0,), Fraction(1, 2), 1)
    assert (a * b) == CoeffElem.monomial(1, 1, (1,), 1, 1)
    assert (a - a).is_zero()
    assert (a + b).z_degree_range() == (0, 1)
