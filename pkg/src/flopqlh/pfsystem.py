"""Differential operators in z*d_t, the Picard-Fuchs pair and flop identities.

A ``DiffOp`` is a finite sum ``c(q, z) * prod_k (z d_k)^{e_k}`` with
coefficients written to the left.  Moving ``z d_k`` past a coefficient uses
``z d_k c = c z d_k + z theta_k(c)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from . import curveclasses as cc
from .cohring import TotalAlgebra
from .curveclasses import CurveClass
from .exactalg import CoeffElem, RatFuncQ1, f_basic
from .ifunc import HLaurent, IFunction, apply_monomial, direction_names, directions

Mono = Tuple[int, ...]


class DiffOp:
    __slots__ = ("ndir", "nbase", "terms")

    def __init__(self, ndir: int, nbase: int, terms: Optional[Mapping[Mono, CoeffElem]] = None):
        self.ndir = ndir
        self.nbase = nbase
        clean: Dict[Mono, CoeffElem] = {}
        if terms:
            for k, v in terms.items():
                if not v.is_zero():
                    clean[tuple(k)] = v
        self.terms = clean

    # -- constructors

    @classmethod
    def zero(cls, ndir: int, nbase: int) -> "DiffOp":
        return cls(ndir, nbase)

    @classmethod
    def scalar(cls, ndir: int, nbase: int, c: CoeffElem) -> "DiffOp":
        return cls(ndir, nbase, {(0,) * ndir: c})

    @classmethod
    def monomial(cls, ndir: int, nbase: int, mono: Sequence[int], c: Optional[CoeffElem] = None) -> "DiffOp":
        if c is None:
            c = CoeffElem.one(nbase)
        return cls(ndir, nbase, {tuple(mono): c})

    @classmethod
    def linear(cls, ndir: int, nbase: int, coeffs: Sequence[int]) -> "DiffOp":
        out = {}
        for k, c in enumerate(coeffs):
            if c:
                e = [0] * ndir
                e[k] = 1
                out[tuple(e)] = CoeffElem.scalar(c, nbase)
        return cls(ndir, nbase, out)

    # -- algebra

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, DiffOp) and self.terms == other.terms

    def __add__(self, other: "DiffOp") -> "DiffOp":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return DiffOp(self.ndir, self.nbase, out)

    def __neg__(self) -> "DiffOp":
        return DiffOp(self.ndir, self.nbase, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def lscale(self, c) -> "DiffOp":
        """c * self, c a coefficient placed on the left."""
        if not isinstance(c, CoeffElem):
            c = CoeffElem.scalar(c, self.nbase)
        return DiffOp(self.ndir, self.nbase, {k: c * v for k, v in self.terms.items()})

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    def left_mul_d(self, k: int) -> "DiffOp":
        """(z d_k) * self."""
        z = CoeffElem.monomial(1, 0, (0,) * self.nbase)
        out: Dict[Mono, CoeffElem] = {}
        for mono, c in self.terms.items():
            m2 = list(mono)
            m2[k] += 1
            m2 = tuple(m2)
            out[m2] = out[m2] + c if m2 in out else c
            th = _theta(c, k, self.ndir, self.nbase)
            if not th.is_zero():
                t = z * th
                out[mono] = out[mono] + t if mono in out else t
        return DiffOp(self.ndir, self.nbase, out)

    def __mul__(self, other: "DiffOp") -> "DiffOp":
        out = DiffOp.zero(self.ndir, self.nbase)
        for mono, c in self.terms.items():
            acc = other
            for k in range(self.ndir - 1, -1, -1):
                for _ in range(mono[k]):
                    acc = acc.left_mul_d(k)
            out = out + acc.lscale(c)
        return out

    def __pow__(self, n: int) -> "DiffOp":
        out = DiffOp.monomial(self.ndir, self.nbase, (0,) * self.ndir)
        for _ in range(n):
            out = out * self
        return out

    def substitute(self, lin: Sequence["DiffOp"], coeff_map) -> "DiffOp":
        """Replace z d_k by lin[k] (constant-coefficient) and map coefficients."""
        out = DiffOp.zero(self.ndir, self.nbase)
        one = DiffOp.monomial(self.ndir, self.nbase, (0,) * self.ndir)
        for mono, c in self.terms.items():
            acc = one
            for k, e in enumerate(mono):
                for _ in range(e):
                    acc = acc * lin[k]
            out = out + acc.lscale(coeff_map(c))
        return out

    def __repr__(self) -> str:
        return f"DiffOp({self.to_str()})"

    def to_str(self, names: Optional[Sequence[str]] = None) -> str:
        if names is None:
            names = [f"d{k}" for k in range(self.ndir)]
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, key=lambda m: (-sum(m), tuple(-x for x in m))):
            c = self.terms[mono]
            ds = []
            for k, e in enumerate(mono):
                if e:
                    ds.append(f"(zd_{names[k]})" + (f"^{e}" if e > 1 else ""))
            cs = c.to_str()
            if ds:
                parts.append(("" if cs == "1" else f"[{cs}]") + "".join(ds))
            else:
                parts.append(f"[{cs}]")
        return " + ".join(parts)


def _theta(c: CoeffElem, k: int, ndir: int, nbase: int) -> CoeffElem:
    """Derivative of a coefficient along direction k."""
    flop = ndir - nbase == 2
    if k == 0:
        return c.theta("t1")
    if flop and k == 1:
        return c.theta("t2")
    g = k - (2 if flop else 1)
    return c.theta("base", g)


# ---------------------------------------------------------------------------
# scenario-bound helpers
# ---------------------------------------------------------------------------


class OpContext:
    """Direction bookkeeping for one algebra."""

    def __init__(self, X: TotalAlgebra):
        self.X = X
        self.dirs = directions(X)
        self.names = direction_names(X)
        self.ndir = len(self.dirs)
        self.nbase = X.base.ngen

    def one(self) -> DiffOp:
        return DiffOp.monomial(self.ndir, self.nbase, (0,) * self.ndir)

    def coeff(self, z: int = 0, q2: int = 0, base: Sequence[int] = (), f=1) -> CoeffElem:
        base = tuple(base) + (0,) * (self.nbase - len(base))
        return CoeffElem.monomial(z, q2, base, f, self.nbase)

    def q1(self, n: int = 1) -> CoeffElem:
        return self.coeff(f=RatFuncQ1.q1_power(n))

    def divisor_op(self, coeffs: Sequence[int]) -> DiffOp:
        """z d_v for v = c_h h + c_xi xi + sum c_g D_g."""
        ch, cx, *cg = coeffs
        if self.X.kind == "flop":
            lin = [ch, cx] + list(cg)
        else:
            if cx:
                raise ValueError("no xi direction for a single bundle")
            lin = [ch] + list(cg)
        return DiffOp.linear(self.ndir, self.nbase, lin)

    def a_op(self, i: int) -> DiffOp:
        return self.divisor_op((1, 0) + tuple(self.X.mu[i]))

    def b_op(self, i: int) -> DiffOp:
        return self.divisor_op((-1, 1) + tuple(self.X.mu_p[i]))

    def xi_op(self) -> DiffOp:
        return self.divisor_op((0, 1) + (0,) * self.nbase)

    def mono(self, **exps) -> Tuple[int, ...]:
        e = [0] * self.ndir
        for name, v in exps.items():
            e[self.names.index(name)] = v
        return tuple(e)

    def canonical_monomial(self, n: int) -> Tuple[int, ...]:
        """Naive quantization exponents of the n-th canonical basis element."""
        X = self.X
        i, l, m = X.keys[n]
        e = [0] * self.ndir
        e[0] = l
        if X.kind == "flop":
            e[1] = m
        for g, x in enumerate(base_monomial(X, i)):
            e[self.ndir - self.nbase + g] += x
        return tuple(e)

    def canonical_set(self) -> Dict[Tuple[int, ...], int]:
        return {self.canonical_monomial(n): n for n in range(self.X.rank)}


def base_monomial(X: TotalAlgebra, i: int) -> Tuple[int, ...]:
    """Exponents in the base divisors whose product is the base basis element i."""
    base = X.base
    if i == 0:
        return (0,) * base.ngen
    for g, idx in enumerate(base.divisors):
        if idx == i:
            e = [0] * base.ngen
            e[g] = 1
            return tuple(e)
    raise ValueError(f"base class {base.names[i]} is not a divisor; naive quantization needs a monomial presentation")


def build_pf(X: TotalAlgebra) -> Tuple[DiffOp, Optional[DiffOp]]:
    """(box_l, box_gamma); box_gamma is None for a single projective bundle."""
    ctx = OpContext(X)
    r1 = X.r + 1
    prod_a = ctx.one()
    for i in range(r1):
        prod_a = prod_a * ctx.a_op(i)
    if X.kind != "flop":
        return prod_a - ctx.one().lscale(ctx.q1()), None
    prod_b = ctx.one()
    for i in range(r1):
        prod_b = prod_b * ctx.b_op(i)
    box_l = prod_a - prod_b.lscale(ctx.q1())
    box_g = ctx.xi_op() * prod_b - ctx.one().lscale(ctx.coeff(q2=1))
    return box_l, box_g


# ---------------------------------------------------------------------------
# action on the I-function
# ---------------------------------------------------------------------------


def coefficient_terms(X: TotalAlgebra, c: CoeffElem, beta: CurveClass):
    """Yield (z shift, source class, rational scalar) for c applied at beta.

    Only source classes that can be I-effective are produced, which makes the
    q1-expansion of rational coefficients exact at the target class.
    """
    for (ez, e2, eb), f in c.terms.items():
        rest = tuple(b - e for b, e in zip(beta.beta_s, eb))
        if any(x < 0 for x in rest):
            continue
        upto = beta.d + cc.mu_I(X, rest)
        for k, a in f.laurent(upto).items():
            src = CurveClass(rest, beta.d - k, beta.d2 - e2)
            yield ez, src, a


def apply_at(op: DiffOp, ifn: IFunction, beta: CurveClass) -> HLaurent:
    """Coefficient of q^beta e^{D.beta} in op(I) (prefactor e^{D/z} stripped)."""
    X = ifn.X
    out = HLaurent(X.rank)
    for mono, c in op.terms.items():
        for ez, src, a in coefficient_terms(X, c, beta):
            if not cc.is_I_effective(X, src):
                continue
            v = apply_monomial(X, ifn.ops, src, mono, ifn(src))
            if not v.is_zero():
                out = out + v.zshift(ez).scale(a)
    return out


@dataclass
class PFReport:
    name: str
    checked: List[CurveClass]
    boundary: List[CurveClass]
    failures: List[CurveClass]

    @property
    def ok(self) -> bool:
        return not self.failures


def pf_check(X: TotalAlgebra, box: Tuple[int, int, int], ifn: Optional[IFunction] = None) -> List[PFReport]:
    """Verify box_l I = 0 and box_gamma I = 0 on the truncation box."""
    if ifn is None:
        ifn = IFunction(X, box[0] + 2)
    box_l, box_g = build_pf(X)
    classes = cc.box_classes(X, *box)
    inbox = set(classes)
    reports = []
    zero = cc.zero_class(X)
    ell = CurveClass(zero.beta_s, 1, 0)
    gam = CurveClass(zero.beta_s, 0, 1)
    ops = [("box_l", box_l, ell)]
    if box_g is not None:
        ops.append(("box_gamma", box_g, gam))
    for name, op, step in ops:
        checked, boundary, failures = [], [], []
        for b in classes:
            pred = b - step
            if cc.is_I_effective(X, pred) and pred not in inbox:
                boundary.append(b)
                continue
            res = apply_at(op, ifn, b)
            checked.append(b)
            if not res.is_zero():
                failures.append(b)
        reports.append(PFReport(name, checked, boundary, failures))
    return reports


# ---------------------------------------------------------------------------
# boundary reductions
# ---------------------------------------------------------------------------


def reduce_power(X: TotalAlgebra, a: int, b: int, lift: str = "iminimal") -> DiffOp:
    """Rewrite (z d_t1)^a (z d_t2)^b into canonical monomials modulo the system ideal."""
    if X.kind != "flop":
        raise ValueError("reduce_power is defined for double bundles")
    if 0 <= a <= X.r and 0 <= b <= X.r + 1:
        raise ValueError("monomial already in canonical range")
    from .lerayhirsch import Reducer

    ctx = OpContext(X)
    red = Reducer.for_algebra(X, lift=lift)
    mono = ctx.mono(t1=a, t2=b)
    return red.normal_form_op(mono)


def closed_form_reductions(r: int, a: int, b: int) -> DiffOp:
    """Explicit boundary formulas for a point base (S = pt).

    (r+1, 0): f * sum_k C(r+1,k) D2^k (-D1)^{r+1-k}
    (r+1, j>=1): q1 q2 (D2 + z)^{j-1}
    (0, r+2): (1 - (-1)^{r+1} q1) q2 - sum_{k=1}^r (-1)^{r+1-k} C(r+1,k) D1^{r+1-k} D2^{k+1}
    """
    from math import comb

    from .cohring import point_base

    X = TotalAlgebra(point_base(), r, [()] * (r + 1), [()] * (r + 1))
    ctx = OpContext(X)
    D1 = DiffOp.monomial(2, 0, (1, 0))
    D2 = DiffOp.monomial(2, 0, (0, 1))
    one = ctx.one()
    if a == r + 1 and b == 0:
        out = DiffOp.zero(2, 0)
        for k in range(1, r + 2):
            out = out + ((D2 ** k) * ((-D1) ** (r + 1 - k))).lscale(comb(r + 1, k))
        return out.lscale(CoeffElem.scalar(f_basic(r)))
    if a == r + 1 and b >= 1:
        zc = DiffOp.scalar(2, 0, CoeffElem.monomial(1, 0, ()))
        return ((D2 + zc) ** (b - 1)).lscale(CoeffElem.monomial(0, 1, (), RatFuncQ1.q1()))
    if a == 0 and b == r + 2:
        s = -1 if (r + 1) % 2 == 0 else 1
        const = CoeffElem.monomial(0, 1, (), RatFuncQ1.q1() * s + 1)
        out = one.lscale(const)
        for k in range(1, r + 1):
            sign = (-1) ** (r + 1 - k)
            out = out - ((D1 ** (r + 1 - k)) * (D2 ** (k + 1))).lscale(sign * comb(r + 1, k))
        return out
    raise ValueError("no closed form for this boundary monomial")


# ---------------------------------------------------------------------------
# flop identities
# ---------------------------------------------------------------------------


def flop_substitution(X: TotalAlgebra):
    """Linear images of z d_k and the coefficient map under the flop."""
    ctx = OpContext(X)
    n, nb = ctx.ndir, ctx.nbase
    lin = []
    for k in range(n):
        if k == 0:
            lin.append(DiffOp.linear(n, nb, [-1, 1] + [0] * nb))
        else:
            e = [0] * n
            e[k] = 1
            lin.append(DiffOp.linear(n, nb, e))
    return lin, CoeffElem.subs_flop


@dataclass
class FlopPFReport:
    identity: str
    ok: bool
    lhs: str
    rhs: str
    first_mismatch: Optional[str] = None


def flop_pf_identities(X: TotalAlgebra, Xp: Optional[TotalAlgebra] = None, apply_flop: bool = True) -> List[FlopPFReport]:
    """Check T box_l = -q1'^{-1} box_l' and T box_g = z d_xi' box_l' + q1' box_g'."""
    if Xp is None:
        Xp = X.flopped()
    ctx = OpContext(Xp)
    bl, bg = build_pf(X)
    blp, bgp = build_pf(Xp)
    lin, cmap = flop_substitution(X)
    if apply_flop:
        Tbl = bl.substitute(lin, cmap)
        Tbg = bg.substitute(lin, cmap)
    else:
        Tbl, Tbg = bl, bg
    rhs_l = blp.lscale(ctx.q1(-1) * -1)
    rhs_g = ctx.xi_op() * blp + bgp.lscale(ctx.q1(1))
    out = []
    for name, lhs, rhs in (("T box_l = -q^{-l'} e^{t1} box_l'", Tbl, rhs_l), ("T box_g = zd_xi' box_l' + q^{l'} e^{-t1} box_g'", Tbg, rhs_g)):
        diff = lhs - rhs
        mism = None
        if not diff.is_zero():
            k = sorted(diff.terms)[0]
            mism = f"monomial {k}: {diff.terms[k].to_str()}"
        out.append(FlopPFReport(name, diff.is_zero(), lhs.to_str(ctx.names), rhs.to_str(ctx.names), mism))
    return out
