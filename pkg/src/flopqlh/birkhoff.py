"""Gauge transform B, Birkhoff factorization, mirror map and 3-point invariants.

Two routes to B are provided.  ``gauge_from_connection`` solves the
cancellation recursion weight by weight from the connection matrices, with
coefficients rational in q1.  ``birkhoff_factorization`` factors the matrix
of derivatives of I class by class.  They agree after expanding in q1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import curveclasses as cc
from .cohring import TotalAlgebra
from .curveclasses import CurveClass
from .exactalg import CoeffElem, RatFuncQ1
from .ifunc import HLaurent, IFunction, apply_monomial
from .lerayhirsch import ConnMatrix, CoeffField, Reducer, assemble_connection, field_to_series, flop_basis_change
from .pfsystem import OpContext

Weight = Tuple[Tuple[int, ...], int]
SMat = List[List[CoeffElem]]
FMat = List[List[Fraction]]


class GaugeError(RuntimeError):
    """The cancellation recursion met an inconsistent right-hand side."""


# ---------------------------------------------------------------------------
# CoeffElem matrices
# ---------------------------------------------------------------------------


def szero(n: int, nbase: int) -> SMat:
    return [[CoeffElem.zero(nbase) for _ in range(n)] for _ in range(n)]


def sident(n: int, nbase: int) -> SMat:
    return [[CoeffElem.one(nbase) if i == j else CoeffElem.zero(nbase) for j in range(n)] for i in range(n)]


def sadd(A: SMat, B: SMat) -> SMat:
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def ssub(A: SMat, B: SMat) -> SMat:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def smul(A: SMat, B: SMat) -> SMat:
    n = len(A)
    nb = A[0][0].nbase if n else 0
    out = szero(n, nb)
    for i in range(n):
        for k in range(n):
            a = A[i][k]
            if a.is_zero():
                continue
            for j in range(n):
                b = B[k][j]
                if not b.is_zero():
                    out[i][j] = out[i][j] + a * b
    return out


def sscale(A: SMat, c) -> SMat:
    return [[x * c for x in row] for row in A]


def smap(A: SMat, fn) -> SMat:
    return [[fn(x) for x in row] for row in A]


def sis_zero(A: SMat) -> bool:
    return all(x.is_zero() for row in A for x in row)


def commutator(A: SMat, B: SMat) -> SMat:
    return ssub(smul(A, B), smul(B, A))


def zpart(A: SMat, n: int) -> SMat:
    """Coefficient of z^n (z-free)."""
    return zshift_mat(smap(A, lambda x: x.z_part(n)), -n)


def zrange(A: SMat) -> Tuple[int, int]:
    lo, hi = 0, 0
    first = True
    for row in A:
        for x in row:
            if x.is_zero():
                continue
            a, b = x.z_degree_range()
            if first:
                lo, hi, first = a, b, False
            else:
                lo, hi = min(lo, a), max(hi, b)
    return lo, hi


def zshift_mat(A: SMat, s: int) -> SMat:
    return smap(A, lambda x: CoeffElem({(k[0] + s, k[1], k[2]): v for k, v in x.terms.items()}, x.nbase))


def theta_mat(A: SMat, ctx: OpContext, a: str) -> SMat:
    k = ctx.names.index(a)
    if k == 0:
        return smap(A, lambda x: x.theta("t1"))
    if ctx.X.kind == "flop" and k == 1:
        return smap(A, lambda x: x.theta("t2"))
    g = k - (ctx.ndir - ctx.nbase)
    return smap(A, lambda x: x.theta("base", g))


def split_weights(A: SMat) -> Dict[Weight, SMat]:
    n = len(A)
    nb = A[0][0].nbase if n else 0
    out: Dict[Weight, SMat] = {}
    for i, row in enumerate(A):
        for j, x in enumerate(row):
            for w in x.weights():
                out.setdefault(w, szero(n, nb))[i][j] = x.weight_part(w)
    return out


def wadd(a: Weight, b: Weight) -> Weight:
    return (tuple(x + y for x, y in zip(a[0], b[0])), a[1] + b[1])


def wsub(a: Weight, b: Weight) -> Weight:
    return (tuple(x - y for x, y in zip(a[0], b[0])), a[1] - b[1])


def wstr(w: Weight) -> str:
    return f"({','.join(map(str, w[0]))};{w[1]})"


def candidate_weights(X: TotalAlgebra, gmax: int) -> List[Weight]:
    """Weights (beta_S, d2) of positive grade <= gmax inside the grading cone."""
    from itertools import product

    c = cc.grading_coefficient(X)
    ng = X.base.ngen
    out = []
    for s in product(range(gmax + 1), repeat=ng):
        S = sum(s)
        if c * S > gmax + (c - 1) * S:
            continue
        lo = -(c - 1) * S if X.kind == "flop" else 0
        hi = gmax - c * S if X.kind == "flop" else 0
        for d2 in range(lo, hi + 1):
            g = c * S + d2
            if 0 < g <= gmax:
                out.append((tuple(s), d2))
    out.sort(key=lambda w: (cc.weight_grade(X, w), w))
    return out


def weight_along(ctx: OpContext, w: Weight, a: str) -> Optional[int]:
    """Eigenvalue of theta_a on weight w; None for t1 (acts on q1 directly)."""
    k = ctx.names.index(a)
    if k == 0:
        return None
    if ctx.X.kind == "flop" and k == 1:
        return w[1]
    return w[0][k - (ctx.ndir - ctx.nbase)]


# ---------------------------------------------------------------------------
# route (b): gauge from the connection
# ---------------------------------------------------------------------------


@dataclass
class GaugeB:
    X: TotalAlgebra
    gmax: int
    blocks: Dict[Weight, SMat]
    reduced: Dict[str, Dict[Weight, SMat]]
    conn: Dict[str, Dict[Weight, SMat]]

    @property
    def rank(self) -> int:
        return self.X.rank

    @property
    def nbase(self) -> int:
        return self.X.base.ngen

    def zero_weight(self) -> Weight:
        return ((0,) * self.nbase, 0)

    def total(self) -> SMat:
        out = szero(self.rank, self.nbase)
        for M in self.blocks.values():
            out = sadd(out, M)
        return out

    def inverse_blocks(self) -> Dict[Weight, SMat]:
        n, nb = self.rank, self.nbase
        w0 = self.zero_weight()
        inv: Dict[Weight, SMat] = {w0: sident(n, nb)}
        for w in candidate_weights(self.X, self.gmax):
            acc = szero(n, nb)
            for w1, Bw1 in self.blocks.items():
                if w1 == w0:
                    continue
                w2 = wsub(w, w1)
                if w2 in inv:
                    acc = sadd(acc, smul(Bw1, inv[w2]))
            inv[w] = sscale(acc, -1)
        return {w: M for w, M in inv.items() if not sis_zero(M)}

    def reduced_total(self, a: str) -> SMat:
        out = szero(self.rank, self.nbase)
        for M in self.reduced[a].values():
            out = sadd(out, M)
        return out

    def to_json(self) -> dict:
        def mat(M):
            return [[x.to_json() for x in row] for row in M]

        return {
            "weight_bound": self.gmax,
            "blocks": {wstr(w): mat(M) for w, M in sorted(self.blocks.items())},
        }


def connection_blocks(X: TotalAlgebra, conns: Dict[str, ConnMatrix], gmax: int) -> Dict[str, Dict[Weight, SMat]]:
    return {a: split_weights(C.series(X, gmax)) for a, C in conns.items()}


def gauge_from_connection(X: TotalAlgebra, conns: Dict[str, ConnMatrix], gmax: int = 2) -> GaugeB:
    ctx = OpContext(X)
    n, nb = X.rank, ctx.nbase
    Cw = connection_blocks(X, conns, gmax)
    w0 = ((0,) * nb, 0)
    zero = szero(n, nb)
    C0 = {a: Cw[a].get(w0, zero) for a in Cw}
    for a, M in C0.items():
        if zrange(M) != (0, 0) and not sis_zero(M):
            raise GaugeError(f"weight-zero part of C_{a} depends on z")
    B: Dict[Weight, SMat] = {w0: sident(n, nb)}
    Ct: Dict[str, Dict[Weight, SMat]] = {a: {w0: C0[a]} for a in Cw}
    for w in candidate_weights(X, gmax):
        R = {}
        for a in Cw:
            acc = Cw[a].get(w, zero)
            for w1, Bw1 in B.items():
                if w1 == w0:
                    continue
                w2 = wsub(w, w1)
                if w2 != w0 and w2 in Cw[a]:
                    acc = sadd(acc, smul(Bw1, Cw[a][w2]))
                if w2 != w0 and w2 in Ct[a]:
                    acc = ssub(acc, smul(Ct[a][w2], Bw1))
            R[a] = acc
        if all(sis_zero(M) for M in R.values()):
            continue
        pivot = None
        for a in Cw:
            wt = weight_along(ctx, w, a)
            if wt:
                pivot = (a, wt)
                break
        if pivot is None:
            raise GaugeError(f"weight {wstr(w)}: no direction with non-zero weight")
        a_star, wt = pivot
        _, top = zrange(R[a_star])
        Bw: Dict[int, SMat] = {}
        cur = zero
        for m in range(top, 0, -1):
            rhs = sadd(commutator(cur, C0[a_star]), zpart(R[a_star], m))
            cur = sscale(rhs, Fraction(1, wt))
            if not sis_zero(cur):
                Bw[m - 1] = cur
        full = zero
        for m, M in Bw.items():
            full = sadd(full, zshift_mat(M, m))
        for a in Cw:
            lo, hi = zrange(R[a])
            hi = max(hi, max(Bw, default=-1) + 1)
            for m in range(1, hi + 1):
                Bm = Bw.get(m, zero)
                Bm1 = Bw.get(m - 1, zero)
                res = sadd(ssub(commutator(Bm, C0[a]), theta_mat(Bm1, ctx, a)), zpart(R[a], m))
                if not sis_zero(res):
                    raise GaugeError(f"weight {wstr(w)}, direction {a}, z^{m}: inconsistent cancellation")
            if lo < 0:
                raise GaugeError(f"weight {wstr(w)}: negative z power in right-hand side")
            Ctw = sadd(commutator(Bw.get(0, zero), C0[a]), zpart(R[a], 0))
            if not sis_zero(Ctw):
                Ct[a][w] = Ctw
        if not sis_zero(full):
            B[w] = full
    return GaugeB(X, gmax, B, Ct, Cw)


def reduced_connection(G: GaugeB) -> Dict[str, SMat]:
    """C~_a as a single z-free matrix per direction."""
    out = {}
    for a in G.reduced:
        M = G.reduced_total(a)
        lo, hi = zrange(M)
        if (lo, hi) != (0, 0) and not sis_zero(M):
            raise GaugeError(f"C~_{a} depends on z")
        out[a] = M
    return out


def gauge_residual(G: GaugeB) -> List[Tuple[str, Weight]]:
    """Weights where -z d_a B + B C_a - C~_a B fails (empty when exact)."""
    ctx = OpContext(G.X)
    n, nb = G.rank, G.nbase
    bad = []
    allw = [((0,) * nb, 0)] + candidate_weights(G.X, G.gmax)
    for a in G.conn:
        for w in allw:
            acc = zero = szero(n, nb)
            if w in G.blocks:
                acc = ssub(acc, zshift_mat(theta_mat(G.blocks[w], ctx, a), 1))
            for w1, Bw1 in G.blocks.items():
                w2 = wsub(w, w1)
                if w2 in G.conn[a]:
                    acc = sadd(acc, smul(Bw1, G.conn[a][w2]))
                if w2 in G.reduced[a]:
                    acc = ssub(acc, smul(G.reduced[a][w2], Bw1))
            if not sis_zero(acc):
                bad.append((a, w))
    return bad


def class_coefficient(c: CoeffElem, beta: CurveClass, zexp: int) -> Fraction:
    """Coefficient of z^zexp q^beta in a weight-graded CoeffElem."""
    out = Fraction(0)
    for (ez, e2, eb), f in c.terms.items():
        if ez == zexp and e2 == beta.d2 and tuple(eb) == tuple(beta.beta_s):
            out += f.laurent(beta.d).get(beta.d, Fraction(0))
    return out


def expand_blocks(X: TotalAlgebra, blocks: Dict[Weight, SMat], beta: CurveClass) -> Dict[int, FMat]:
    """{z power: numeric matrix} of the q^beta coefficient."""
    w = cc.weight(beta)
    M = blocks.get(w)
    n = X.rank
    out: Dict[int, FMat] = {}
    if M is None:
        return out
    lo, hi = zrange(M)
    for m in range(lo, hi + 1):
        mat = [[class_coefficient(M[i][j], beta, m) for j in range(n)] for i in range(n)]
        if any(x for row in mat for x in row):
            out[m] = mat
    return out


# ---------------------------------------------------------------------------
# route (a): Birkhoff factorization of the I-columns
# ---------------------------------------------------------------------------


ZMat = Dict[int, FMat]


def _zm_add(A: ZMat, B: ZMat, s: int = 1) -> ZMat:
    out = {k: [row[:] for row in v] for k, v in A.items()}
    for k, M in B.items():
        if k not in out:
            out[k] = [[s * x for x in row] for row in M]
        else:
            out[k] = [[x + s * y for x, y in zip(r1, r2)] for r1, r2 in zip(out[k], M)]
    return {k: v for k, v in out.items() if any(x for row in v for x in row)}


def _zm_mul(A: ZMat, B: ZMat) -> ZMat:
    out: ZMat = {}
    for k1, M1 in A.items():
        for k2, M2 in B.items():
            n = len(M1)
            P = [[sum((M1[i][k] * M2[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]
            out = _zm_add(out, {k1 + k2: P})
    return out


def derivative_matrix(X: TotalAlgebra, ifn: IFunction, beta: CurveClass) -> ZMat:
    """M_beta[k][e]: coefficient of q^beta in the e-th quantized derivative of I."""
    ctx = OpContext(X)
    n = X.rank
    out: ZMat = {}
    Ib = ifn(beta)
    if Ib.is_zero():
        return out
    for e in range(n):
        col = apply_monomial(X, ifn.ops, beta, ctx.canonical_monomial(e), Ib)
        for zexp, vec in col.terms.items():
            M = out.setdefault(zexp, [[Fraction(0)] * n for _ in range(n)])
            for k in range(n):
                M[k][e] = vec[k]
    return {k: v for k, v in out.items() if any(x for row in v for x in row)}


@dataclass
class Factorization:
    classes: List[CurveClass]
    L: Dict[CurveClass, ZMat]
    B: Dict[CurveClass, ZMat]


def support_order(X: TotalAlgebra, classes: Iterable[CurveClass], order: str = "grade") -> List[CurveClass]:
    cls = list(classes)
    if order == "grade":
        return sorted(cls, key=lambda b: (cc.class_grade(X, b), b))
    if order == "linear":
        # a second linear extension: A*|s| + d + 2*d2 with A large enough
        ng = X.base.ngen
        A = 1
        for g in range(ng):
            e = [0] * ng
            e[g] = 1
            A = max(A, cc.mu_I(X, e) + 2 * cc.nu_I(X, e) + 1)
        return sorted(cls, key=lambda b: (A * sum(b.beta_s) + b.d + 2 * b.d2, tuple(-x for x in b.beta_s), -b.d2, b))
    raise ValueError(order)


def birkhoff_factorization(X: TotalAlgebra, targets: Sequence[CurveClass], ifn: Optional[IFunction] = None, order: str = "grade") -> Factorization:
    """M = L B with L = Id + O(1/z) and B polynomial in z, class by class."""
    if ifn is None:
        ifn = IFunction(X, max(sum(t.beta_s) for t in targets) + 2)
    support = [b for b in cc.down_closure(X, targets)]
    ordered = support_order(X, support, order)
    zero = cc.zero_class(X)
    n = X.rank
    ident = {0: [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]}
    L: Dict[CurveClass, ZMat] = {zero: ident}
    B: Dict[CurveClass, ZMat] = {zero: ident}
    done = {zero}
    sset = set(support)
    for beta in ordered:
        if beta == zero:
            continue
        R = derivative_matrix(X, ifn, beta)
        for b1 in done:
            if b1 == zero:
                continue
            b2 = beta - b1
            if b2 == zero or b2 not in done:
                continue
            R = _zm_add(R, _zm_mul(L[b1], B[b2]), -1)
        for b1 in done:
            if b1 == zero:
                continue
            b2 = beta - b1
            if b2 in sset and b2 not in done and b2 != zero:
                raise GaugeError(f"class {b2} needed before {beta} in order {order!r}")
        B[beta] = {k: v for k, v in R.items() if k >= 0}
        L[beta] = {k: v for k, v in R.items() if k < 0}
        done.add(beta)
    return Factorization(ordered, L, B)


# ---------------------------------------------------------------------------
# BF/GMT on I
# ---------------------------------------------------------------------------


@dataclass
class BFOperator:
    """P(z) = 1 + sum_beta q^beta sum_e c_{beta,e}(z) d^{z e}."""

    X: TotalAlgebra
    terms: Dict[CurveClass, Dict[int, List[Fraction]]]
    resolved: List[CurveClass]
    unresolved: List[CurveClass] = field(default_factory=list)

    def is_trivial(self) -> bool:
        return not any(any(x for v in t.values() for x in v) for t in self.terms.values())

    def to_json(self) -> dict:
        names = self.X.basis_names()
        out = {}
        for b, t in sorted(self.terms.items()):
            ent = {}
            for k, v in sorted(t.items()):
                for e, x in enumerate(v):
                    if x:
                        ent[f"z^{k}*d[{names[e]}]"] = str(x)
            if ent:
                out[b.key()] = ent
        return {"terms": out, "resolved": [b.key() for b in self.resolved], "unresolved": [b.key() for b in self.unresolved]}


@dataclass
class MirrorMap:
    """tau - t_hat = sum_beta q^beta tau_beta."""

    X: TotalAlgebra
    terms: Dict[CurveClass, List[Fraction]]

    def is_trivial(self) -> bool:
        return not any(any(v) for v in self.terms.values())

    def to_json(self) -> dict:
        return {b.key(): self.X.format_vector(v) for b, v in sorted(self.terms.items()) if any(v)}


@dataclass
class BFResult:
    P: BFOperator
    tau: MirrorMap
    J: Dict[CurveClass, HLaurent]


def bf_gmt(X: TotalAlgebra, targets: Sequence[CurveClass], ifn: Optional[IFunction] = None, order: str = "grade") -> BFResult:
    """Remove non-negative z powers of I class by class via naive quantization."""
    if ifn is None:
        ifn = IFunction(X, max(sum(t.beta_s) for t in targets) + 2)
    ctx = OpContext(X)
    n = X.rank
    support = support_order(X, cc.down_closure(X, targets), order)
    zero = cc.zero_class(X)
    P: Dict[CurveClass, Dict[int, List[Fraction]]] = {}
    J: Dict[CurveClass, HLaurent] = {}
    tau: Dict[CurveClass, List[Fraction]] = {}
    cols: Dict[Tuple[CurveClass, int], HLaurent] = {}

    def column(b: CurveClass, e: int) -> HLaurent:
        key = (b, e)
        if key not in cols:
            cols[key] = apply_monomial(X, ifn.ops, b, ctx.canonical_monomial(e), ifn(b)) if cc.is_I_effective(X, b) else HLaurent(n)
        return cols[key]

    done = []
    for beta in support:
        acc = ifn(beta) if cc.is_I_effective(X, beta) else HLaurent(n)
        for b1 in done:
            b2 = beta - b1
            if not cc.is_I_effective(X, b2):
                continue
            for zexp, coeffs in P[b1].items():
                for e, c in enumerate(coeffs):
                    if c:
                        acc = acc + column(b2, e).zshift(zexp).scale(c)
        if beta != zero:
            pos = acc.nonneg_part()
            Pb: Dict[int, List[Fraction]] = {}
            for zexp, vec in pos.terms.items():
                Pb[zexp] = [-x for x in vec]
            P[beta] = Pb
            acc = acc - pos
            tau[beta] = list(acc.coeff(-1))
        J[beta] = acc
        if beta != zero:
            done.append(beta)
    return BFResult(BFOperator(X, P, list(support)), MirrorMap(X, tau), J)


def operator_from_gauge(G: GaugeB, beta: CurveClass) -> Dict[int, List[Fraction]]:
    """Coefficient of q^beta (beta != 0) in P(z) = sum_k (B^{-1})_{k0} d^{z k}."""
    if beta.is_zero():
        return {}
    inv = G.inverse_blocks()
    mats = expand_blocks(G.X, inv, beta)
    return {m: [M[k][0] for k in range(G.rank)] for m, M in mats.items() if any(M[k][0] for k in range(G.rank))}


def mirror_map_from_gauge(G: GaugeB) -> Dict[Weight, List[CoeffElem]]:
    """tau - t_hat per weight, integrated from the first column of C~."""
    ctx = OpContext(G.X)
    out = {}
    w0 = ((0,) * G.nbase, 0)
    for w in candidate_weights(G.X, G.gmax):
        col = None
        for a in G.reduced:
            wt = weight_along(ctx, w, a)
            if wt:
                M = G.reduced[a].get(w)
                col = [CoeffElem.zero(G.nbase)] * G.rank if M is None else [M[k][0] * Fraction(1, wt) for k in range(G.rank)]
                break
        if col is None:
            continue
        # every direction must agree with the integrated vector
        for a in G.reduced:
            M = G.reduced[a].get(w)
            got = [CoeffElem.zero(G.nbase)] * G.rank if M is None else [M[k][0] for k in range(G.rank)]
            k = ctx.names.index(a)
            if k == 0:
                want = [c.theta("t1") for c in col]
            else:
                wt = weight_along(ctx, w, a)
                want = [c * wt for c in col]
            if any(not (x - y).is_zero() for x, y in zip(got, want)):
                raise GaugeError(f"mirror map: direction {a} disagrees at weight {wstr(w)}")
        if any(not c.is_zero() for c in col):
            out[w] = col
    return out


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


@dataclass
class Invariant:
    direction: str
    inserted: str
    dual: str
    beta: CurveClass
    value: Fraction
    flagged: bool = False

    def label(self) -> str:
        return f"<{self.direction}, {self.inserted}, ({self.dual})^v>_{self.beta.key()}"


def extract_invariants(G: GaugeB, classes: Sequence[CurveClass], tau: Optional[MirrorMap] = None) -> List[Invariant]:
    """Read C~_a[i][j] at t_hat = 0 as sum_beta q^beta <T_a, T_j, T^i>_beta."""
    X = G.X
    ctx = OpContext(X)
    names = X.basis_names()
    dir_label = {nm: _direction_class(X, ctx, nm) for nm in ctx.names}
    contaminating = []
    if tau is not None:
        contaminating = [b for b, v in tau.terms.items() if any(v)]
    out = []
    for a in G.reduced:
        for beta in classes:
            mats = expand_blocks(X, G.reduced[a], beta)
            M = mats.get(0)
            if M is None:
                continue
            flag = any(cc.is_I_effective(X, beta - b) for b in contaminating)
            for i in range(X.rank):
                for j in range(X.rank):
                    if M[i][j]:
                        out.append(Invariant(dir_label[a], names[j], names[i], beta, M[i][j], flag))
    return out


def _direction_class(X: TotalAlgebra, ctx: OpContext, nm: str) -> str:
    k = ctx.names.index(nm)
    if k == 0:
        return "h"
    if X.kind == "flop" and k == 1:
        return "xi"
    return nm


def three_point(X: TotalAlgebra, invs: Sequence[Invariant], direction: str, b: Sequence[Fraction], c: Sequence[Fraction], beta: CurveClass) -> Fraction:
    """<T_a, b, c>_beta from the table, expanding b and c in the basis."""
    names = X.basis_names()
    pair = X.pairing_matrix()
    total = Fraction(0)
    for inv in invs:
        if inv.direction != direction or inv.beta != beta:
            continue
        j = names.index(inv.inserted)
        i = names.index(inv.dual)
        # c = sum_i (int T_i c) T^i
        ci = sum((pair[i][k] * c[k] for k in range(X.rank)), Fraction(0))
        total += inv.value * b[j] * ci
    return total


def one_point_from_J(X: TotalAlgebra, Jb: HLaurent) -> List[Fraction]:
    """<T_i>_beta = int (z^-2 coefficient of J_beta) T_i."""
    v = Jb.coeff(-2)
    pair = X.pairing_matrix()
    return [sum((pair[i][k] * v[k] for k in range(X.rank)), Fraction(0)) for i in range(X.rank)]


# ---------------------------------------------------------------------------
# flop invariance
# ---------------------------------------------------------------------------


@dataclass
class FlopCheckReport:
    ok: bool
    checked: int
    first_failure: Optional[str] = None


def _series_matrix(F: CoeffField, X: TotalAlgebra, M, gmax: int) -> SMat:
    return [[field_to_series(F, X, v, gmax) if v else CoeffElem.zero(F.nbase) for v in row] for row in M]


def _truncate(X: TotalAlgebra, A: SMat, gmax: int) -> SMat:
    from .lerayhirsch import truncate_grade

    return smap(A, lambda x: truncate_grade(X, x, gmax))


def check_flop_invariance(X: TotalAlgebra, gmax: int = 2, lift_x="iminimal", lift_xp="iminimal", perturb: bool = False) -> FlopCheckReport:
    """T B = F^{-1} B' G and F (T tau) = tau' per weight and z power."""
    from .linalg import mat_inverse

    Xp = X.flopped()
    red = Reducer.for_algebra(X, lift_x)
    redp = Reducer.for_algebra(Xp, lift_xp)
    G = gauge_from_connection(X, assemble_connection(X, lift_x, red), gmax)
    Gp = gauge_from_connection(Xp, assemble_connection(Xp, lift_xp, redp), gmax)
    Gmat = _series_matrix(redp.F, Xp, flop_basis_change(X, Xp, redp), gmax)
    n, nb = X.rank, X.base.ngen
    Fcl = [[Fraction(0)] * n for _ in range(n)]
    for e in range(n):
        img = X.flop_map(X.basis(e), Xp)
        for k in range(n):
            Fcl[k][e] = img.v[k]
    Finv = mat_inverse(Fcl)
    Finv_s = [[CoeffElem.scalar(x, nb) for x in row] for row in Finv]
    lhs_total = _truncate(X, smul(smul(Finv_s, Gp.total()), Gmat), gmax)
    rhs_total = smap(G.total(), CoeffElem.subs_flop)
    if perturb:
        rhs_total[0][0] = rhs_total[0][0] + CoeffElem.monomial(0, 1, (0,) * nb, 1, nb)
    checked = 0
    for w in [((0,) * nb, 0)] + candidate_weights(X, gmax):
        for i in range(n):
            for j in range(n):
                checked += 1
                a = lhs_total[i][j].weight_part(w)
                b = rhs_total[i][j].weight_part(w)
                if a != b:
                    return FlopCheckReport(False, checked, f"B weight {wstr(w)} entry ({i},{j}): T B = {b.to_str()}, F^-1 B' G = {a.to_str()}")
    tau = mirror_map_from_gauge(G)
    taup = mirror_map_from_gauge(Gp)
    for w in set(tau) | set(taup):
        v = tau.get(w, [CoeffElem.zero(nb)] * n)
        vp = taup.get(w, [CoeffElem.zero(nb)] * n)
        Tv = [sum((v[e].subs_flop() * Fcl[k][e] for e in range(n)), CoeffElem.zero(nb)) for k in range(n)]
        for k in range(n):
            checked += 1
            if Tv[k] != vp[k]:
                return FlopCheckReport(False, checked, f"tau weight {wstr(w)} component {k}: T tau = {Tv[k].to_str()}, tau' = {vp[k].to_str()}")
    return FlopCheckReport(True, checked)
