"""Wall-clock timings for the main pipeline stages.

    python benchmarks/bench.py [--repeat N] [--scenario NAME ...]

Set FLOPQLH_PURE_PYTHON=1 to force the pure-Python kernel even when a
compiled one is importable.  The active backend is printed first.
"""

from __future__ import annotations

import argparse
import statistics
import time
from fractions import Fraction

from flopqlh import birkhoff as bk
from flopqlh import curveclasses as cc
from flopqlh._kernel import BACKEND
from flopqlh.ifunc import HLaurent, IFunction, assemble_I
from flopqlh.lerayhirsch import Reducer, assemble_connection, system_soundness
from flopqlh.pfsystem import pf_check
from flopqlh.scenario import bundled


def timed(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return statistics.median(out)


def kernel_case(name):
    X = bundled(name).algebra()
    ifn = IFunction(X, 2)
    ops = ifn.ops
    h = ops.coeffs_of("h")
    f = HLaurent(X.rank, {0: [Fraction(k + 1, 3) for k in range(X.rank)]})

    def run():
        # (D + m z) then 1/(D + m z): round trips through both kernels
        g = f
        for m in range(1, 40):
            g = ops.div_linear(h, m, ops.mul_linear(h, m, g))
        return g

    return run


def stages(name):
    sc = bundled(name)
    X = sc.algebra()
    conns = assemble_connection(X, sc.lift, Reducer.for_algebra(X, sc.lift))
    box = cc.box_classes(X, *sc.box)
    nonzero = [b for b in box if not b.is_zero()]
    return [
        ("I-function", lambda: assemble_I(X, sc.box)),
        ("Picard-Fuchs check", lambda: pf_check(X, sc.box)),
        # normal forms are memoized on the reducer, so build a fresh one
        ("reduction + connection", lambda: assemble_connection(X, sc.lift, Reducer.for_algebra(X, sc.lift))),
        ("system soundness", lambda: system_soundness(X, conns, box)),
        ("gauge", lambda: bk.gauge_from_connection(X, conns, sc.weight_bound)),
        ("Birkhoff factorization", lambda: bk.bf_gmt(X, nonzero)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scenario", nargs="*", default=["hirzebruch", "p1flop_00_01"])
    ns = ap.parse_args(argv)
    print(f"kernel backend: {BACKEND}")
    for name in ns.scenario:
        print(f"\n{name}")
        print(f"  {'linear-factor kernel':<24}{timed(kernel_case(name), ns.repeat):9.3f} s")
        for label, fn in stages(name):
            print(f"  {label:<24}{timed(fn, ns.repeat):9.3f} s")


if __name__ == "__main__":
    main()
