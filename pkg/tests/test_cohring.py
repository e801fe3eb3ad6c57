from fractions import Fraction
from itertools import product

import pytest

from flopqlh.cohring import TotalAlgebra, p1_base, point_base
from conftest import algebra

NAMES_42 = ["1", "h", "xi", "p", "h*xi", "h*p", "xi^2", "xi*p", "h*xi^2", "h*xi*p", "xi^2*p", "h*xi^2*p"]


def test_hirzebruch_ring():
    X = algebra("hirzebruch")
    assert X.rank == 4
    assert X.basis_names() == ["1", "h", "p", "h*p"]
    h, p = X.h(), X.divisor(0)
    # h (h + p) = 0
    assert (h * (h + p)).is_zero()
    assert X.integral(h * p) == 1


def test_p1flop_basis_order():
    X = algebra("p1flop_00_01")
    assert X.rank == 12
    assert X.basis_names() == NAMES_42


@pytest.mark.parametrize("name", ["hirzebruch", "p1flop_00_01", "p1flop_mm_00", "simple_r2"])
def test_associative_and_pairing_nondegenerate(name):
    X = algebra(name)
    assert X.check_associativity()
    from flopqlh.linalg import mat_inverse

    mat_inverse(X.pairing_matrix())


@pytest.mark.parametrize("name", ["p1flop_00_01", "p1flop_01_00", "p1flop_mm_00", "simple_r1", "simple_r2"])
def test_flop_map_preserves_pairing(name):
    X = algebra(name)
    Xp = X.flopped()
    for i, j in product(range(X.rank), repeat=2):
        a, b = X.basis(i), X.basis(j)
        assert X.pairing(a, b) == Xp.pairing(X.flop_map(a, Xp), X.flop_map(b, Xp))


def test_flop_map_is_involution_up_to_identification():
    X = algebra("p1flop_00_01")
    Xp = X.flopped()
    for i in range(X.rank):
        a = X.basis(i)
        assert Xp.flop_map(X.flop_map(a, Xp), X).v == a.v


def test_flop_map_on_divisors():
    # T h = xi' - h', T xi = xi'
    X = algebra("p1flop_00_01")
    Xp = X.flopped()
    assert X.flop_map(X.h(), Xp) == Xp.xi() - Xp.h()
    assert X.flop_map(X.xi(), Xp) == Xp.xi()


def test_point_base_double_bundle_rank():
    for r in (1, 2, 3):
        X = TotalAlgebra(point_base(), r, [()] * (r + 1), [()] * (r + 1))
        assert X.rank == (r + 1) * (r + 2)


def test_classes_are_exact():
    X = TotalAlgebra(p1_base(), 1, [[0], [1]], kind="bundle")
    c = X.h() * Fraction(1, 3)
    assert c.v[1] == Fraction(1, 3)
