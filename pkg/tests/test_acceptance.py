"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> ... PASS|FAIL`` line.  Run the
file directly (``python tests/test_acceptance.py``) to get just the eight
lines without pytest.
"""

import random
import sys
import time
from itertools import product
from pathlib import Path

import sympy

sys.path.insert(0, str(Path(__file__).parent))

from flopqlh import birkhoff as bk
from flopqlh import curveclasses as cc
from flopqlh.cohring import TotalAlgebra, p1_base
from flopqlh.curveclasses import CurveClass
from flopqlh.exactalg import RatFuncQ1, UPoly
from flopqlh.golden import run_golden
from flopqlh.ifunc import HLaurent, assemble_I, homogeneity_defects
from flopqlh.lerayhirsch import check_naturality, system_soundness
from flopqlh.pfsystem import flop_pf_identities, pf_check
from flopqlh.regularize import (
    RelativeSeries,
    polynomial_part_identity,
    partial_bf1,
    partial_bf2,
    rational_reg_pri,
    series_compatibility,
)
from conftest import algebra, connection, gauge, nonzero_box

GOLDEN = ("hirzebruch", "p1flop_00_01")


def report(n, title, checks, capsys=None):
    """Print the verdict line past pytest's capture and return the failing labels."""
    bad = [label for label, ok in checks if not ok]
    line = f"ACCEPTANCE {n} {title}: {'PASS' if not bad else 'FAIL ' + ', '.join(bad)}"
    if capsys is None:
        print(line, flush=True)
    else:
        with capsys.disabled():
            print(f"\n{line}", flush=True)
    return bad


def golden_checks(name, limit):
    t = time.perf_counter()
    items = run_golden(name)
    dt = time.perf_counter() - t
    checks = [(f"{it.name} ({len(it.mismatches)} mismatches)", it.ok) for it in items]
    checks.append((f"runtime {dt:.1f}s >= {limit}s", dt < limit))
    return checks


def test_1_golden_hirzebruch(capsys):
    assert not report(1, "golden Hirzebruch", golden_checks("hirzebruch", 5), capsys)


def test_2_golden_p1_flop(capsys):
    assert not report(2, "golden P1 flop", golden_checks("p1flop_00_01", 60), capsys)


def test_3_picard_fuchs(capsys):
    checks = []
    for name in GOLDEN:
        reps = pf_check(algebra(name), (2, 2, 6))
        checks.append((f"{name} annihilated", bool(reps) and all(r.ok for r in reps)))
        checks.append((f"{name} nonempty", all(r.checked for r in reps)))
    assert not report(3, "Picard-Fuchs soundness on (2,2,6)", checks, capsys)


def test_4_system_soundness(capsys):
    checks = []
    for name in GOLDEN:
        X = algebra(name)
        reps = system_soundness(X, connection(name), cc.box_classes(X, 2, 2, 6))
        checks.append((name, bool(reps) and all(r.ok for r in reps)))
    assert not report(4, "system soundness on (2,2,6)", checks, capsys)


def test_5_flop_naturality(capsys):
    checks = []
    for name in ("p1flop_00_01", "p1flop_01_00"):
        rep = check_naturality(algebra(name))
        checks.append((f"{name} T C_a = C'_a", rep.ok and rep.checked == 3 * 144))
        checks.append((f"{name} PF identities", all(r.ok for r in flop_pf_identities(algebra(name)))))
        inv = bk.check_flop_invariance(algebra(name), 1)
        checks.append((f"{name} gauge invariance", inv.ok))
    assert not report(5, "flop naturality", checks, capsys)


def test_6_birkhoff_factorization(capsys):
    checks = []
    for name in GOLDEN:
        X = algebra(name)
        zero = cc.zero_class(X)
        a = bk.bf_gmt(X, nonzero_box(name))
        b = bk.bf_gmt(X, nonzero_box(name), order="linear")
        tail = all(J.nonneg_part().is_zero() for c, J in a.J.items() if c != zero)
        checks.append((f"{name} P I = 1 + O(1/z)", tail and a.J[zero] == HLaurent.one(X.rank)))
        checks.append((f"{name} P, tau trivial mod Novikov", zero not in a.P.terms and zero not in a.tau.terms))
        checks.append((f"{name} unique P", a.P.to_json()["terms"] == b.P.to_json()["terms"]))
        checks.append((f"{name} unique tau", a.tau.to_json() == b.tau.to_json()))
        G = gauge(name)
        F = bk.birkhoff_factorization(X, nonzero_box(name))
        compared = [c for c in nonzero_box(name) if cc.weight_grade(X, cc.weight(c)) <= G.gmax]
        same = all(bk.expand_blocks(X, G.blocks, c) == F.B.get(c, {}) for c in compared)
        checks.append((f"{name} routes agree", bool(compared) and same))
    assert not report(6, "Birkhoff factorization and mirror map", checks, capsys)


def _random_rational(rng):
    poles = rng.sample(range(-5, 6), rng.randint(1, 3))
    den = UPoly([1])
    for e in poles:
        den = den * UPoly([-e, 1]) ** rng.randint(1, 3)
    num = UPoly([rng.randint(-9, 9) for _ in range(rng.randint(1, den.deg + 3))])
    return RatFuncQ1(num if not num.is_zero() else UPoly([1]), den), sorted(poles)


def _partial_fraction_checks(count):
    x = sympy.Symbol("x")
    rng = random.Random(7)
    ok = True
    for _ in range(count):
        F, poles = _random_rational(rng)
        Fs = sympy.Poly(list(reversed(F.num.c)), x).as_expr() / sympy.Poly(list(reversed(F.den.c)), x).as_expr()
        ap = sympy.Add.make_args(sympy.apart(Fs, x))
        for e in range(-6, 7):
            good, _, _ = polynomial_part_identity(F, e, poles)
            sing = [t for t in ap if sympy.denom(t).subs(x, e) == 0]
            want = sympy.cancel(Fs - sum(sing)).subs(x, e)
            got = rational_reg_pri(F, e).reg
            ok = ok and good and sympy.Rational(got.numerator, got.denominator) == want
    return ok


REG_CASES = [
    ("regfibre_r1", (1,), 0, False),
    ("regfibre_r2", (1,), 0, True),
    ("simple_r1", (), 1, False),
    ("simple_r2", (), 1, True),
    ("p1flop_00_01", (1,), 0, False),
]


def test_7_regularization(capsys):
    checks = [("polynomial-part identity on 50 rationals", _partial_fraction_checks(50))]
    for name, bs, d2, tw in REG_CASES:
        X = algebra(name)
        rel = RelativeSeries(X, bs, d2, -3)
        pts = range(-5, 6)
        checks.append((f"{name} series match at {len(pts)} points",
                       all(series_compatibility(X, bs, d2, d, 3, tw, rel).ok for d in pts)))
        rep = partial_bf1(X, bs, d2, tw)
        if rep.stable_ok is not None:
            checks.append((f"{name} stable polynomiality", rep.stable_ok and bool(rep.matches_polynomial_part)))
        checks.append((f"{name} top defect", rep.top_defect_ok and bool(rep.top_defect)))
        checks.append((f"{name} first step", rep.ok))
    for name, tw in (("regfibre_r1", False), ("regfibre_r2", True)):
        rep = partial_bf2(algebra(name), (1,), 0, tw)
        checks.append((f"{name} lambda = -(r+2)", rep.lam == -(algebra(name).r + 2)))
        checks.append((f"{name} first stable series vanishes", rep.first_series_vanishes))
    assert not report(7, "regularization suite", checks, capsys)


def test_8_structure(capsys):
    checks = []
    for name in ("p1flop_00_01", "p1flop_01_00", "p1flop_mm_00", "simple_r2"):
        X = algebra(name)
        Xp = X.flopped()
        ok = all(X.pairing(X.basis(i), X.basis(j)) == Xp.pairing(X.flop_map(X.basis(i), Xp), X.flop_map(X.basis(j), Xp))
                 for i, j in product(range(X.rank), repeat=2))
        checks.append((f"{name} pairing", ok))
    X = algebra("p1flop_00_01")
    Xp = X.flopped()
    lattice = list(cc.iter_lattice(1, range(10), range(-5, 5), range(-5, 5)))
    dual = all(cc.a_dot(X, b) == cc.b_dot(Xp, cc.flop_push(b)) and cc.b_dot(X, b) == cc.a_dot(Xp, cc.flop_push(b))
               for b in lattice)
    checks.append((f"duality on {len(lattice)} classes", dual and len(lattice) >= 1000))
    for name in ("hirzebruch", "p1flop_00_01", "p1flop_01_00"):
        sc_box = __import__("conftest").scenario(name).box
        checks.append((f"{name} homogeneity", homogeneity_defects(assemble_I(algebra(name), sc_box)) == []))
    adm = comm = True
    for mu in product(range(-2, 3), repeat=4):
        Y = TotalAlgebra(p1_base(), 1, [[mu[0]], [mu[1]]], [[mu[2]], [mu[3]]], "flop")
        Yp = Y.flopped()
        for s in range(4):
            L = cc.i_minimal_lift(Y, (s,))
            adm = adm and cc.admissible(Y, L) and cc.is_I_effective(Y, L)
            adm = adm and not cc.is_I_effective(Y, CurveClass(L.beta_s, L.d - 1, L.d2))
            if cc.mu_I(Y, (s,)) + cc.mu_p_I(Y, (s,)) >= 0:
                comm = comm and cc.flop_push(L) == cc.i_minimal_lift(Yp, (s,))
    checks += [("lift admissibility", adm), ("lift commutes with T", comm)]
    assert not report(8, "structural properties", checks, capsys)


if __name__ == "__main__":
    failed = 0
    for fn in (test_1_golden_hirzebruch, test_2_golden_p1_flop, test_3_picard_fuchs, test_4_system_soundness,
               test_5_flop_naturality, test_6_birkhoff_factorization, test_7_regularization, test_8_structure):
        try:
            fn(None)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
