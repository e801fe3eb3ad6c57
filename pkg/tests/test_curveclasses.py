import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flopqlh import curveclasses as cc
from flopqlh.cohring import TotalAlgebra, p1_base
from flopqlh.curveclasses import CurveClass
from conftest import algebra

deg = st.integers(-3, 3)


@st.composite
def flops(draw):
    r = draw(st.integers(1, 3))
    mu = [[draw(deg)] for _ in range(r + 1)]
    mup = [[draw(deg)] for _ in range(r + 1)]
    return TotalAlgebra(p1_base(), r, mu, mup, "flop")


@pytest.mark.parametrize("name", ["p1flop_00_01", "p1flop_mm_00", "simple_r2"])
def test_linear_factor_duality_sweep(name):
    X = algebra(name)
    Xp = X.flopped()
    n = 0
    for b in cc.iter_lattice(X.base.ngen, range(0, 10) if X.base.ngen else range(1), range(-5, 5), range(-5, 5)):
        assert cc.a_dot(X, b) == cc.b_dot(Xp, cc.flop_push(b))
        assert cc.b_dot(X, b) == cc.a_dot(Xp, cc.flop_push(b))
        n += 1
    assert n >= 100


def test_sweep_size_for_p1_base():
    X = algebra("p1flop_00_01")
    assert sum(1 for _ in cc.iter_lattice(1, range(10), range(-5, 5), range(-5, 5))) == 1000


@given(flops(), st.integers(0, 4))
@settings(max_examples=80, deadline=None)
def test_i_minimal_lift_is_admissible(X, s):
    L = cc.i_minimal_lift(X, (s,))
    assert cc.admissible(X, L)
    assert cc.is_I_effective(X, L)
    # nothing below it in d or d2 is I-effective
    assert not cc.is_I_effective(X, CurveClass(L.beta_s, L.d - 1, L.d2))
    assert not cc.is_I_effective(X, CurveClass(L.beta_s, L.d, L.d2 - 1))


@given(flops(), st.integers(0, 4))
@settings(max_examples=80, deadline=None)
def test_lift_commutes_with_flop_when_mu_sum_nonnegative(X, s):
    Xp = X.flopped()
    L = cc.i_minimal_lift(X, (s,))
    if cc.mu_I(X, (s,)) + cc.mu_p_I(X, (s,)) >= 0:
        assert cc.flop_push(L) == cc.i_minimal_lift(Xp, (s,))
    else:
        assert cc.twisted_lift(X, (s,)).d == L.d + cc.mu_I(X, (s,)) + cc.mu_p_I(X, (s,))


@given(flops(), st.integers(0, 3), st.integers(-4, 4), st.integers(-4, 4))
@settings(max_examples=80, deadline=None)
def test_flop_push_is_an_involution(X, s, d, d2):
    b = CurveClass((s,), d, d2)
    assert cc.flop_push(cc.flop_push(b)) == b


@given(flops(), st.integers(0, 3), st.integers(-4, 4), st.integers(-4, 4))
@settings(max_examples=80, deadline=None)
def test_lambda_is_flop_invariant(X, s, d, d2):
    b = CurveClass((s,), d, d2)
    assert cc.lam(X, b) == cc.lam(X.flopped(), cc.flop_push(b))


def test_lengths_of_extremal_class():
    X = algebra("p1flop_00_01")
    L = cc.lengths(X, CurveClass((0,), 1, 0))
    assert L.n == (-1, -1) and L.n_p == (1, 1) and L.n_xi == 0


def test_box_and_closure():
    X = algebra("p1flop_00_01")
    box = cc.box_classes(X, 1, 1, 2)
    assert all(cc.is_I_effective(X, b) for b in box)
    closure = cc.down_closure(X, box)
    assert set(box) <= set(closure)
    for b in closure:
        assert cc.is_I_effective(X, b)


def test_curve_class_key_roundtrip():
    b = CurveClass((2, 1), -3, 4)
    assert CurveClass.from_key(b.key()) == b
