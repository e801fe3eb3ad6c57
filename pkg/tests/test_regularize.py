import random
from fractions import Fraction
from math import factorial

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from flopqlh.cohring import TotalAlgebra, p1_base, point_base
from flopqlh.exactalg import RatFuncQ1, UPoly, polynomial_part
from flopqlh.regularize import (
    HARMONIC,
    HarmonicCache,
    RelativeSeries,
    closed_form_agrees,
    euler_identity,
    fundamental_W,
    harmonic_laurent,
    polynomial_part_identity,
    partial_bf1,
    partial_bf2,
    rational_reg_pri,
    reg_pri,
    residue_product,
    series_compatibility,
    top_defect_sign,
)
from conftest import algebra

x = sympy.Symbol("x")


def fr(v):
    v = sympy.Rational(sympy.simplify(v))
    return Fraction(int(v.p), int(v.q))


def sym(f: RatFuncQ1):
    num = sum(sympy.Rational(c.numerator, c.denominator) * x**k for k, c in enumerate(f.num.c))
    den = sum(sympy.Rational(c.numerator, c.denominator) * x**k for k, c in enumerate(f.den.c))
    return num / den


def factorial_oracle(mu, mup, d):
    # (-1)^sum(d - mu'_i - 1) prod (d - mu'_i - 1)! / (d + mu_i)!
    v = Fraction(1)
    for m, mp in zip(mu, mup):
        if d + m < 0:
            return Fraction(0)
        v *= Fraction(factorial(d - mp - 1), factorial(d + m))
    return v * (-1) ** sum(d - mp - 1 for mp in mup)


# ---------------------------------------------------------------------------
# harmonic numbers


def test_harmonic_small_values():
    H = HarmonicCache()
    assert H(0, 1) == 0
    assert H(3, 1) == Fraction(11, 6)
    assert H(2, 2) == Fraction(5, 4)


@given(st.integers(-30, 30).filter(lambda d: d != 0), st.integers(1, 4))
def test_harmonic_telescoping(d, k):
    assert HARMONIC(d, k) - HARMONIC(d - 1, k) == Fraction(1, d**k)


def test_cached_values_telescope():
    H = HarmonicCache()
    for d in range(-6, 7):
        H(d, 2)
    seen = {(d, k): v for d, k, v in H.cached()}
    for (d, k), v in seen.items():
        if d and (d - 1, k) in seen:
            assert v - seen[d - 1, k] == Fraction(1, d**k)


def test_harmonic_interval_skips_zero():
    assert HARMONIC.interval(-2, 2, 1) == Fraction(-1) - Fraction(1, 2) + 1 + Fraction(1, 2)


# ---------------------------------------------------------------------------
# fundamental rational function


def test_w_all_lengths_zero():
    X = algebra("simple_r1")
    W = fundamental_W(X, (), 0)
    assert sympy.simplify(sym(W.rational) - 1 / x**2) == 0
    for d in (3, 4, 5):
        assert W.value(d) == factorial_oracle((0, 0), (0, 0), d) == Fraction(1, d * d)


@st.composite
def degree_data(draw):
    r = draw(st.integers(1, 3))
    mu = [[draw(st.integers(-3, 2))] for _ in range(r + 1)]
    mup = [[draw(st.integers(-3, 2))] for _ in range(r + 1)]
    return TotalAlgebra(p1_base(), r, mu, mup, "flop"), draw(st.integers(0, 2)), draw(st.integers(0, 2))


@given(degree_data())
@settings(max_examples=60, deadline=None)
def test_w_matches_factorials_in_stable_range(data):
    X, s, d2 = data
    W = fundamental_W(X, (s,), d2, sign_twist=X.r % 2 == 0)
    lo, hi = W.unstable
    start = max([hi + 1] + [mp + 1 for mp in W.mu_p])
    for d in range(start, start + 4):
        assert W.value(d) * W.twist_factor(d) == factorial_oracle(W.mu, W.mu_p, d)
        assert W.factorial_value(d) == factorial_oracle(W.mu, W.mu_p, d)
    assert all(lo <= e <= hi for e in W.poles)


def test_polynomial_case_has_no_poles():
    X = TotalAlgebra(p1_base(), 1, [[0], [-3]], [[0], [1]], "flop")
    W = fundamental_W(X, (1,), 0)
    # mu_1 + mu'_1 = -2 on the second factor, first factor gives 1/x
    X2 = TotalAlgebra(p1_base(), 1, [[-2], [-3]], [[0], [1]], "flop")
    W2 = fundamental_W(X2, (1,), 0)
    assert W2.poles == []
    assert W2.rational.den == UPoly([1])
    assert RatFuncQ1(polynomial_part(W2.rational)) == W2.rational
    assert W.poles == [0]


def test_reg_at_stable_point_is_value():
    W = fundamental_W(algebra("regfibre_r1"), (1,), 0)
    for e in (-3, 2, 5):
        rp = reg_pri(W, e)
        assert rp.principal == {} and rp.reg == W.value(e)


def test_fibre_table():
    # W = -(x-2)(x-3)/x for F = O + O(-4), F' = O + O(1), beta_S = 1
    W = fundamental_W(algebra("regfibre_r1"), (1,), 0)
    assert sympy.simplify(sym(W.rational) + (x - 2) * (x - 3) / x) == 0
    rp = reg_pri(W, 0)
    assert rp.reg == 5 and rp.principal == {1: -6}
    assert polynomial_part(W.rational) == UPoly([5, -1])


# ---------------------------------------------------------------------------
# Reg / Pri and the polynomial-part identity


def random_rational(rng):
    poles = rng.sample(range(-5, 6), rng.randint(1, 3))
    den = UPoly([1])
    for e in poles:
        den = den * UPoly([-e, 1]) ** rng.randint(1, 3)
    num = UPoly([rng.randint(-9, 9) for _ in range(rng.randint(1, den.deg + 3))])
    if num.is_zero():
        num = UPoly([1])
    return RatFuncQ1(num, den), sorted(poles)


def test_polynomial_part_on_random_rationals():
    rng = random.Random(20240611)
    n = 0
    for _ in range(60):
        F, poles = random_rational(rng)
        Fs = sym(F)
        P_or = sympy.div(*sympy.fraction(sympy.together(Fs)), x)[0]
        ap = sympy.apart(Fs, x)
        for e in range(-6, 7):
            ok, lhs, rhs = polynomial_part_identity(F, e, poles)
            assert ok
            # independent side: polynomial part from sympy division
            assert lhs == fr(P_or.subs(x, e))
            # Reg: drop the principal terms at e from sympy's apart, then evaluate
            if e in poles:
                sing = [t for t in sympy.Add.make_args(ap) if sympy.denom(t).subs(x, e) == 0]
                reg = fr(sympy.cancel(Fs - sum(sing)).subs(x, e))
            else:
                reg = fr(Fs.subs(x, e))
            assert rational_reg_pri(F, e).reg == reg
            n += 1
    assert n >= 50 * 13


@pytest.mark.parametrize("mu,mup,d", [(0, 0, 0), (1, 1, -1), (1, 2, 0), (2, 1, 1), (0, 3, 2)])
def test_simple_pole_residue(mu, mup, d):
    expr = 1 / sympy.prod([x - j for j in range(-mu, mup + 1)])
    assert residue_product(mu, mup, d) == fr(sympy.residue(expr, x, d))


# ---------------------------------------------------------------------------
# compatibility with the I-function expansion

COMPAT = [
    ("regfibre_r1", (1,), 0, False),
    ("regfibre_r2", (1,), 0, True),
    ("simple_r1", (), 1, False),
    ("simple_r2", (), 1, True),
    ("p1flop_00_01", (1,), 0, False),
]


@pytest.mark.parametrize("name,bs,d2,tw", COMPAT)
def test_series_compatibility(name, bs, d2, tw):
    X = algebra(name)
    rel = RelativeSeries(X, bs, d2, -3)
    for d in range(-5, 6):
        rep = series_compatibility(X, bs, d2, d, 3, tw, rel)
        assert rep.ok, (d, rep.rows)
        a, b = rep.leading_order()
        assert a == b


def test_compatibility_at_zero_class():
    X = algebra("simple_r1")
    assert series_compatibility(X, (), 0, 0, 2).ok


def test_harmonic_laurent_matches_partial_fractions():
    W = fundamental_W(algebra("simple_r2"), (), 1, True)
    for d in range(-3, 4):
        assert harmonic_laurent(W, d, 3) == {k: v for k, v in W.laurent(d, 3).items() if v}


# ---------------------------------------------------------------------------
# first and second regularization steps


@pytest.mark.parametrize("name,bs,d2,tw", [
    ("regfibre_r1", (1,), 0, False),
    ("regfibre_r2", (1,), 0, True),
    ("simple_r1", (), 1, False),
    ("simple_r2", (), 1, True),
])
def test_partial_bf1(name, bs, d2, tw):
    rep = partial_bf1(algebra(name), bs, d2, tw)
    assert rep.ok, rep.notes
    assert rep.top_defect_ok and rep.euler_ok


def test_partial_bf1_large_lambda_vanishes():
    rep = partial_bf1(algebra("p1flop_00_01"), (1,), 0)
    assert rep.clause_c is True and rep.ok


def test_r_even_needs_the_twist():
    assert not partial_bf1(algebra("regfibre_r2"), (1,), 0, False).ok


def test_top_defect_hand_example():
    # r = 1, point base, d2 = 1: at d = 0 Reg W = 3 and the defect is -3 Theta'
    rep = partial_bf1(algebra("simple_r1"), (), 1)
    assert (0, Fraction(3), True) in rep.top_defect
    assert top_defect_sign(1) == -1 and top_defect_sign(2) == 1


def test_degree_of_polynomial_part():
    W = fundamental_W(algebra("regfibre_r1"), (1,), 0)
    P = W.polynomial()
    assert P.deg <= max(0, W.degree_at_infinity())


polys = st.lists(st.integers(-5, 5), min_size=1, max_size=4).map(UPoly)


@given(polys, st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_euler_identity(P, r):
    ok, total = euler_identity(P, r)
    assert ok and total.is_zero()


@given(polys, st.integers(1, 3), st.integers(-3, 4))
@settings(max_examples=40, deadline=None)
def test_closed_form_matches_truncation(P, r, start):
    assert closed_form_agrees(P, r, start, 10)


@pytest.mark.parametrize("name,tw", [("regfibre_r1", False), ("regfibre_r2", True)])
def test_partial_bf2(name, tw):
    rep = partial_bf2(algebra(name), (1,), 0, tw)
    assert rep.lam == -(algebra(name).r + 2)
    assert rep.first_series_vanishes
    assert rep.trouble_term_ok
    assert rep.ok


def test_naive_quantization_leaves_first_series():
    rep = partial_bf2(algebra("regfibre_r1"), (1,), 0)
    assert not all(ok for _, ok in rep.naive_first_series)


def test_second_step_requires_negative_lambda():
    with pytest.raises(ValueError):
        partial_bf2(algebra("p1flop_00_01"), (1,), 0)
