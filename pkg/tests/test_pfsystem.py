import pytest

from flopqlh.cohring import TotalAlgebra, point_base
from flopqlh.ifunc import HLaurent, IFunction
from flopqlh.lerayhirsch import Reducer
from flopqlh.pfsystem import OpContext, build_pf, closed_form_reductions, flop_pf_identities, pf_check, reduce_power
from conftest import algebra


@pytest.mark.parametrize("name", ["hirzebruch", "p1flop_00_01", "p1flop_mm_00", "simple_r2"])
def test_pf_annihilates_I_on_small_box(name):
    X = algebra(name)
    reps = pf_check(X, (1, 1, 4))
    assert reps and all(r.ok for r in reps)
    assert all(r.checked for r in reps)


def test_pf_operator_count():
    assert build_pf(algebra("hirzebruch"))[1] is None
    assert build_pf(algebra("p1flop_00_01"))[1] is not None


class Corrupted(IFunction):
    def __call__(self, b):
        v = super().__call__(b)
        if b.key() == "1;0;0":
            v = v + HLaurent.one(self.X.rank)
        return v


def test_pf_check_detects_corruption():
    X = algebra("p1flop_00_01")
    reps = pf_check(X, (1, 1, 3), Corrupted(X))
    assert any(r.failures for r in reps)


@pytest.mark.parametrize("name", ["p1flop_00_01", "p1flop_01_00", "p1flop_mm_00", "simple_r2"])
def test_flop_pf_identities(name):
    assert all(r.ok for r in flop_pf_identities(algebra(name)))


def test_flop_pf_identities_need_the_substitution():
    assert not all(r.ok for r in flop_pf_identities(algebra("p1flop_00_01"), apply_flop=False))


@pytest.mark.parametrize("r", [1, 2])
def test_closed_form_boundary_reductions(r):
    X = TotalAlgebra(point_base(), r, [()] * (r + 1), [()] * (r + 1))
    red = Reducer.for_algebra(X)
    ctx = OpContext(X)
    for a, b in [(r + 1, 0), (r + 1, 1), (r + 1, 2), (0, r + 2)]:
        want = red.normal_form(ctx.mono(t1=a, t2=b))
        got = red.reduce_op(closed_form_reductions(r, a, b))
        for k in set(want) | set(got):
            assert not (want.get(k, red.F.zero) - got.get(k, red.F.zero))


def test_reduce_power_rejects_canonical_monomials():
    with pytest.raises(ValueError):
        reduce_power(algebra("p1flop_00_01"), 1, 1)


def test_reduce_power_boundary():
    X = algebra("simple_r1")
    nf = reduce_power(X, 2, 0)
    assert nf


def test_no_closed_form_for_interior():
    with pytest.raises(ValueError):
        closed_form_reductions(1, 1, 1)
