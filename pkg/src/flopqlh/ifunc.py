"""Hypergeometric I-function of a split double (or single) projective bundle.

A term of ``I`` is ``q^beta e^{D/z + D.beta} I_beta(z) J^S_{beta_S}``.  The
prefactor ``e^{D/z}`` is never expanded: a derivative ``z d_v`` acts on the
``beta`` term as multiplication by ``v + z (v.beta)``.  Everything else is a
cohomology-valued Laurent polynomial in ``z`` (``HLaurent``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import curveclasses as cc
from .cohring import CohClass, TotalAlgebra
from .curveclasses import CurveClass

Vec = Tuple[Fraction, ...]


class HLaurent:
    """Finite sum of z^k * (class in H(X))."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Optional[Mapping[int, Sequence[Fraction]]] = None):
        self.n = n
        clean: Dict[int, Vec] = {}
        if terms:
            for k, v in terms.items():
                if any(v):
                    clean[k] = tuple(v)
        self.terms = clean

    @classmethod
    def one(cls, n: int) -> "HLaurent":
        return cls(n, {0: (Fraction(1),) + (Fraction(0),) * (n - 1)})

    @classmethod
    def of_class(cls, c: CohClass, zexp: int = 0) -> "HLaurent":
        return cls(len(c.v), {zexp: c.v})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, HLaurent) and self.terms == other.terms

    def __add__(self, other: "HLaurent") -> "HLaurent":
        out = dict(self.terms)
        for k, v in other.terms.items():
            if k in out:
                out[k] = tuple(a + b for a, b in zip(out[k], v))
            else:
                out[k] = v
        return HLaurent(self.n, out)

    def __sub__(self, other: "HLaurent") -> "HLaurent":
        return self + other.scale(-1)

    def scale(self, c) -> "HLaurent":
        c = Fraction(c)
        if c == 0:
            return HLaurent(self.n)
        return HLaurent(self.n, {k: tuple(a * c for a in v) for k, v in self.terms.items()})

    def zshift(self, s: int) -> "HLaurent":
        return HLaurent(self.n, {k + s: v for k, v in self.terms.items()})

    def zmax(self) -> Optional[int]:
        return max(self.terms) if self.terms else None

    def zmin(self) -> Optional[int]:
        return min(self.terms) if self.terms else None

    def coeff(self, k: int) -> Vec:
        return self.terms.get(k, (Fraction(0),) * self.n)

    def nonneg_part(self) -> "HLaurent":
        return HLaurent(self.n, {k: v for k, v in self.terms.items() if k >= 0})

    def neg_part(self) -> "HLaurent":
        return HLaurent(self.n, {k: v for k, v in self.terms.items() if k < 0})

    def __repr__(self) -> str:
        return f"HLaurent({dict(sorted(self.terms.items()))})"


class DivisorOps:
    """Sparse multiplication by divisor classes of a fixed algebra."""

    def __init__(self, X: TotalAlgebra):
        self.X = X
        self._cache: Dict[Tuple[int, ...], List[List[Tuple[int, Fraction]]]] = {}

    def coeffs_of(self, name: str, i: int = 0) -> Tuple[int, ...]:
        """Coefficient vector (c_h, c_xi, c_g...) of a named divisor."""
        X = self.X
        ng = X.base.ngen
        if name == "h":
            return (1, 0) + (0,) * ng
        if name == "xi":
            return (0, 1) + (0,) * ng
        if name == "base":
            v = [0] * ng
            v[i] = 1
            return (0, 0) + tuple(v)
        if name == "a":
            return (1, 0) + tuple(X.mu[i])
        if name == "b":
            return (-1, 1) + tuple(X.mu_p[i])
        raise ValueError(name)

    def cls(self, coeffs: Sequence[int]) -> CohClass:
        X = self.X
        ch, cx, *cg = coeffs
        c = X.zero()
        if ch:
            c = c + X.h() * ch
        if cx:
            c = c + X.xi() * cx
        for g, a in enumerate(cg):
            if a:
                c = c + X.divisor(g) * a
        return c

    def matrix(self, coeffs: Sequence[int]) -> List[List[Tuple[int, Fraction]]]:
        key = tuple(coeffs)
        got = self._cache.get(key)
        if got is None:
            c = self.cls(key)
            M = self.X.mul_matrix(c)
            n = self.X.rank
            got = [[(j, M[k][j]) for j in range(n) if M[k][j]] for k in range(n)]
            self._cache[key] = got
        return got

    def apply(self, coeffs: Sequence[int], v: Sequence[Fraction]) -> Vec:
        M = self.matrix(coeffs)
        return tuple(sum((c * v[j] for j, c in row), Fraction(0)) for row in M)

    def mul_linear(self, coeffs: Sequence[int], m, f: HLaurent) -> HLaurent:
        """(D + m z) * f for the divisor D with the given coefficients."""
        from ._kernel import mul_linear

        return mul_linear(self.matrix(coeffs), Fraction(m), f)

    def div_linear(self, coeffs: Sequence[int], m, f: HLaurent) -> HLaurent:
        """f / (D + m z), m != 0, expanded by nilpotency of D."""
        if m == 0:
            raise ZeroDivisionError("reciprocal of a pure nilpotent class")
        from ._kernel import div_linear

        return div_linear(self.matrix(coeffs), Fraction(m), f, self.X.dim)


def directed_product(ops: DivisorOps, coeffs: Sequence[int], s: int, f: Optional[HLaurent] = None) -> HLaurent:
    """Multiply f by Gamma(1+D/z)/Gamma(1+D/z+s) * z^{-s}.

    s >= 1 divides by prod_{m=1}^s (D + m z); s <= -1 multiplies by
    prod_{m=s+1}^0 (D + m z), which contains the pure class D itself.
    """
    if f is None:
        f = HLaurent.one(ops.X.rank)
    if s > 0:
        for m in range(1, s + 1):
            f = ops.div_linear(coeffs, m, f)
    elif s < 0:
        for m in range(s + 1, 1):
            f = ops.mul_linear(coeffs, m, f)
    return f


# ---------------------------------------------------------------------------
# base J-functions
# ---------------------------------------------------------------------------


@dataclass
class BaseJ:
    """beta_S -> {z exponent: vector in H(S)}."""

    base_name: str
    coeffs: Dict[Tuple[int, ...], Dict[int, Vec]]

    def get(self, beta_s: Tuple[int, ...]) -> Dict[int, Vec]:
        return self.coeffs.get(tuple(beta_s), {})


def builtin_baseJ(base, max_s: int) -> BaseJ:
    """J-function coefficients of the point or of P^1 up to degree max_s."""
    if base.name == "point":
        return BaseJ("point", {(): {0: (Fraction(1),)}})
    if base.name != "p1":
        raise ValueError("only 'point' and 'p1' have built-in J-functions")
    out: Dict[Tuple[int, ...], Dict[int, Vec]] = {}
    # work in Q[p]/(p^2): series sum_k z^k (c0 + c1 p)
    cur = {0: (Fraction(1), Fraction(0))}
    out[(0,)] = dict(cur)
    for s in range(1, max_s + 1):
        for _ in range(2):
            # divide by (p + s z) = s z (1 + p/(s z))
            nxt: Dict[int, List[Fraction]] = {}
            for k, (c0, c1) in cur.items():
                a = nxt.setdefault(k - 1, [Fraction(0), Fraction(0)])
                a[0] += c0 / s
                a[1] += c1 / s
                b = nxt.setdefault(k - 2, [Fraction(0), Fraction(0)])
                b[1] -= c0 / (s * s)
            cur = {k: (v[0], v[1]) for k, v in nxt.items() if v[0] or v[1]}
        out[(s,)] = dict(cur)
    return BaseJ("p1", out)


def baseJ_qde_residual(J: BaseJ, s: int) -> Dict[int, Vec]:
    """(p + s z)^2 J_s - J_{s-1} for P^1 (zero when the QDE holds)."""
    cur = {k: list(v) for k, v in J.get((s,)).items()}
    for _ in range(2):
        nxt: Dict[int, List[Fraction]] = {}
        for k, (c0, c1) in cur.items():
            a = nxt.setdefault(k + 1, [Fraction(0), Fraction(0)])
            a[0] += s * c0
            a[1] += s * c1
            b = nxt.setdefault(k, [Fraction(0), Fraction(0)])
            b[1] += c0
        cur = nxt
    for k, v in J.get((s - 1,)).items():
        a = cur.setdefault(k, [Fraction(0), Fraction(0)])
        a[0] -= v[0]
        a[1] -= v[1]
    return {k: tuple(v) for k, v in cur.items() if any(v)}


def pullback_J(X: TotalAlgebra, J: BaseJ, beta_s: Tuple[int, ...]) -> HLaurent:
    n = X.rank
    terms: Dict[int, List[Fraction]] = {}
    for k, v in J.get(beta_s).items():
        row = [Fraction(0)] * n
        for i, c in enumerate(v):
            if c:
                row[X.index[(i, 0, 0)]] += c
        terms[k] = row
    return HLaurent(n, terms)


# ---------------------------------------------------------------------------
# relative factor
# ---------------------------------------------------------------------------


def relative_factor(X: TotalAlgebra, beta: CurveClass, ops: Optional[DivisorOps] = None, strip_xi: bool = False) -> HLaurent:
    """I^{X/S}_beta computed directly in H(X)[z, 1/z]."""
    if ops is None:
        ops = DivisorOps(X)
    if X.kind != "flop" and beta.d2 != 0:
        return HLaurent(X.rank)
    f = HLaurent.one(X.rank)
    for i, s in enumerate(cc.a_dot(X, beta)):
        f = directed_product(ops, ops.coeffs_of("a", i), s, f)
        if f.is_zero():
            return f
    if X.kind == "flop":
        for i, s in enumerate(cc.b_dot(X, beta)):
            f = directed_product(ops, ops.coeffs_of("b", i), s, f)
            if f.is_zero():
                return f
        if strip_xi and beta.d2 >= 0:
            f = f.zshift(-beta.d2).scale(Fraction(1, factorial(beta.d2)))
        else:
            f = directed_product(ops, ops.coeffs_of("xi"), beta.d2, f)
    return f


class FormalRing:
    """Q[a_0..a_r, b_0..b_r, xi][z, 1/z], truncated in total formal degree."""

    def __init__(self, X: TotalAlgebra):
        self.X = X
        self.nv = (X.r + 1) * (2 if X.kind == "flop" else 1) + (1 if X.kind == "flop" else 0)
        self.maxdeg = X.dim

    def var(self, kind: str, i: int = 0) -> int:
        r1 = self.X.r + 1
        if kind == "a":
            return i
        if kind == "b":
            return r1 + i
        if kind == "xi":
            return 2 * r1
        raise ValueError(kind)

    def one(self) -> Dict[Tuple[Tuple[int, ...], int], Fraction]:
        return {((0,) * self.nv, 0): Fraction(1)}

    def mul_linear(self, f, v: int, m: int):
        out: Dict[Tuple[Tuple[int, ...], int], Fraction] = {}
        for (e, k), c in f.items():
            if sum(e) + 1 <= self.maxdeg:
                e2 = list(e)
                e2[v] += 1
                key = (tuple(e2), k)
                out[key] = out.get(key, Fraction(0)) + c
            if m:
                key = (e, k + 1)
                out[key] = out.get(key, Fraction(0)) + c * m
        return {k: c for k, c in out.items() if c}

    def div_linear(self, f, v: int, m: int):
        if m == 0:
            raise ZeroDivisionError("reciprocal of a pure formal variable")
        out: Dict[Tuple[Tuple[int, ...], int], Fraction] = {}
        for (e, k), c in f.items():
            base_deg = sum(e)
            for j in range(0, self.maxdeg - base_deg + 1):
                e2 = list(e)
                e2[v] += j
                key = (tuple(e2), k - j - 1)
                val = c * Fraction((-1) ** j, m ** (j + 1))
                out[key] = out.get(key, Fraction(0)) + val
        return {k: c for k, c in out.items() if c}

    def directed(self, f, v: int, s: int):
        if s > 0:
            for m in range(1, s + 1):
                f = self.div_linear(f, v, m)
        elif s < 0:
            for m in range(s + 1, 1):
                f = self.mul_linear(f, v, m)
        return f

    def project(self, f, ops: DivisorOps) -> HLaurent:
        X = self.X
        r1 = X.r + 1
        classes = [ops.cls(ops.coeffs_of("a", i)) for i in range(r1)]
        if X.kind == "flop":
            classes += [ops.cls(ops.coeffs_of("b", i)) for i in range(r1)]
            classes.append(X.xi())
        powcache: Dict[Tuple[int, int], CohClass] = {}

        def pw(v: int, e: int) -> CohClass:
            key = (v, e)
            if key not in powcache:
                c = X.one()
                for _ in range(e):
                    c = c * classes[v]
                powcache[key] = c
            return powcache[key]

        terms: Dict[int, List[Fraction]] = {}
        for (e, k), c in f.items():
            cl = X.one()
            for v, ev in enumerate(e):
                if ev:
                    cl = cl * pw(v, ev)
                    if cl.is_zero():
                        break
            if cl.is_zero():
                continue
            row = terms.setdefault(k, [Fraction(0)] * X.rank)
            for n, x in enumerate(cl.v):
                row[n] += c * x
        return HLaurent(X.rank, terms)


def relative_factor_formal(X: TotalAlgebra, beta: CurveClass, ops: Optional[DivisorOps] = None):
    """Same factor assembled on formal symbols, then projected to H(X)."""
    if ops is None:
        ops = DivisorOps(X)
    R = FormalRing(X)
    f = R.one()
    for i, s in enumerate(cc.a_dot(X, beta)):
        f = R.directed(f, R.var("a", i), s)
    if X.kind == "flop":
        for i, s in enumerate(cc.b_dot(X, beta)):
            f = R.directed(f, R.var("b", i), s)
        f = R.directed(f, R.var("xi"), beta.d2)
    elif beta.d2 != 0:
        return HLaurent(X.rank)
    return R.project(f, ops)


# ---------------------------------------------------------------------------
# truncated I-series
# ---------------------------------------------------------------------------


@dataclass
class SeriesI:
    X: TotalAlgebra
    terms: Dict[CurveClass, HLaurent]
    box: Tuple[int, int, int]
    ops: DivisorOps = field(repr=False, default=None)

    def get(self, beta: CurveClass) -> HLaurent:
        t = self.terms.get(beta)
        if t is not None:
            return t
        return HLaurent(self.X.rank)

    def classes(self) -> List[CurveClass]:
        return sorted(self.terms, key=lambda b: (cc.class_grade(self.X, b), b))

    def to_json(self) -> Dict[str, Dict[str, List[str]]]:
        out = {}
        for b in self.classes():
            f = self.terms[b]
            out[b.key()] = {str(k): [str(x) for x in f.terms[k]] for k in sorted(f.terms)}
        return out

    def render(self) -> str:
        lines = []
        for b in self.classes():
            f = self.terms[b]
            parts = []
            for k in sorted(f.terms, reverse=True):
                parts.append(f"z^{k}*[{self.X.format_vector(f.terms[k])}]")
            lines.append(f"{b}: " + " + ".join(parts))
        return "\n".join(lines)


class IFunction:
    """Lazy, cached I-function coefficients on arbitrary classes."""

    def __init__(self, X: TotalAlgebra, max_s: int = 4):
        self.X = X
        self.ops = DivisorOps(X)
        self.J = builtin_baseJ(X.base, max_s)
        self.max_s = max_s
        self._cache: Dict[CurveClass, HLaurent] = {}

    def __call__(self, beta: CurveClass) -> HLaurent:
        got = self._cache.get(beta)
        if got is not None:
            return got
        X = self.X
        if any(b < 0 for b in beta.beta_s) or (X.kind != "flop" and beta.d2 != 0):
            val = HLaurent(X.rank)
        else:
            if sum(beta.beta_s) > self.max_s:
                self.J = builtin_baseJ(X.base, sum(beta.beta_s) + 2)
                self.max_s = sum(beta.beta_s) + 2
            rel = relative_factor(X, beta, self.ops)
            if rel.is_zero():
                val = rel
            else:
                val = multiply(X, rel, pullback_J(X, self.J, beta.beta_s))
        self._cache[beta] = val
        return val

    def derivative(self, beta: CurveClass, mono: Sequence[int]) -> HLaurent:
        """prod_v (v + z v.beta)^{e_v} applied to I_beta.

        ``mono`` holds exponents for the directions (t1, t2, base_0, ...) of
        the flop case or (t1, base_0, ...) for a single bundle.
        """
        return apply_monomial(self.X, self.ops, beta, mono, self(beta))


def directions(X: TotalAlgebra) -> List[Tuple[int, ...]]:
    """Divisor coefficient vectors (c_h, c_xi, c_g...) of the derivative directions."""
    ng = X.base.ngen
    out = [(1, 0) + (0,) * ng]
    if X.kind == "flop":
        out.append((0, 1) + (0,) * ng)
    for g in range(ng):
        v = [0] * ng
        v[g] = 1
        out.append((0, 0) + tuple(v))
    return out


def direction_names(X: TotalAlgebra) -> List[str]:
    names = ["t1"]
    if X.kind == "flop":
        names.append("t2")
    names += [f"{X.base.names[X.base.divisors[g]]}" for g in range(X.base.ngen)]
    return names


def apply_monomial(X: TotalAlgebra, ops: DivisorOps, beta: CurveClass, mono: Sequence[int], f: HLaurent) -> HLaurent:
    dirs = directions(X)
    for v, e in zip(dirs, mono):
        if e:
            m = cc.divisor_dot(X, v, beta)
            for _ in range(e):
                f = ops.mul_linear(v, m, f)
                if f.is_zero():
                    return f
    return f


def multiply(X: TotalAlgebra, f: HLaurent, g: HLaurent) -> HLaurent:
    terms: Dict[int, List[Fraction]] = {}
    for k1, v1 in f.terms.items():
        for k2, v2 in g.terms.items():
            row = terms.setdefault(k1 + k2, [Fraction(0)] * X.rank)
            for i, a in enumerate(v1):
                if not a:
                    continue
                for j, b in enumerate(v2):
                    if not b:
                        continue
                    for n, c in X.basis_product(i, j):
                        row[n] += a * b * c
    return HLaurent(X.rank, terms)


def assemble_I(X: TotalAlgebra, box: Tuple[int, int, int], ifn: Optional[IFunction] = None) -> SeriesI:
    if ifn is None:
        ifn = IFunction(X, box[0] + 2)
    terms = {}
    for b in cc.box_classes(X, *box):
        v = ifn(b)
        if not v.is_zero():
            terms[b] = v
    return SeriesI(X, terms, tuple(box), ifn.ops)


def homogeneity_defects(series: SeriesI) -> List[Tuple[CurveClass, int, int]]:
    """Stored monomials whose total degree is not 0."""
    X = series.X
    bad = []
    for b, f in series.terms.items():
        c1 = cc.c1_X(X, b)
        for k, v in f.terms.items():
            for n, x in enumerate(v):
                if x and k + X.degree(n) + c1 != 0:
                    bad.append((b, k, n))
    return bad
