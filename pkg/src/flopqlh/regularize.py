"""Regularization over a fixed (beta_S, d2) fibre.

Everything here lives on the relative factor alone: the xi-factor and the
base J-function are dropped, and only the extremal series ``sum_m q^{m l}
I_{m l}`` is used when correction operators act.  Series are normalized
relative to ``A = z^{-lambda-(r+1)} q^{beta_S} q^{d2 gamma}``, so "level k"
means the coefficient of ``A z^k``.  Level 0 is the first stable series.

The fundamental rational function is stored as a parity-free rational
function ``R(x)`` plus a parity bit: ``W(d) = (-1)^(parity*d) R(d)``.  For r
odd the parity is always 0.  For r even it is 1 unless the sign twist is on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from . import curveclasses as cc
from .cohring import CohClass, TotalAlgebra
from .exactalg import RatFuncQ1, UPoly, f_basic, laurent_at, polynomial_part, principal_part_value
from .ifunc import DivisorOps, FormalRing

CSeries = Dict[int, CohClass]
Formal = Dict[Tuple[int, ...], Fraction]


# ---------------------------------------------------------------------------
# harmonic numbers
# ---------------------------------------------------------------------------


class HarmonicCache:
    """H_d^(k) = sum_{j=1}^d j^-k, extended to d < 0 by H_d = (-1)^(k+1) H_{-d-1}.

    The extension keeps H_d - H_{d-1} = d^-k for every d != 0, so that
    ``sum_{j=a}^{b} j^-k = H_b - H_{a-1}`` for any interval avoiding 0.
    """

    def __init__(self):
        self._t: Dict[int, List[Fraction]] = {}

    def _row(self, k: int, n: int) -> List[Fraction]:
        row = self._t.setdefault(k, [Fraction(0)])
        while len(row) <= n:
            j = len(row)
            row.append(row[-1] + Fraction(1, j ** k))
        return row

    def __call__(self, d: int, k: int = 1) -> Fraction:
        if k < 1:
            raise ValueError("order k must be >= 1")
        if d >= 0:
            return self._row(k, d)[d]
        v = self._row(k, -d - 1)[-d - 1]
        return v if k % 2 == 1 else -v

    def interval(self, a: int, b: int, k: int) -> Fraction:
        """sum_{j=a}^{b} j^-k over the integers of [a, b] other than 0."""
        if a > b:
            return Fraction(0)
        if a <= 0 <= b:
            return self.interval(a, -1, k) + self.interval(1, b, k)
        return self(b, k) - self(a - 1, k)

    def cached(self) -> List[Tuple[int, int, Fraction]]:
        return [(k, d, v) for k, row in sorted(self._t.items()) for d, v in enumerate(row)]


HARMONIC = HarmonicCache()


# ---------------------------------------------------------------------------
# the fundamental rational function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FundW:
    r: int
    mu: Tuple[int, ...]
    mu_p: Tuple[int, ...]  # already shifted by d2
    rational: RatFuncQ1
    parity: int
    twist: bool
    unstable: Tuple[int, int]

    @property
    def poles(self) -> List[int]:
        out = set()
        for m, mp in zip(self.mu, self.mu_p):
            if m + mp >= 0:
                out.update(range(-m, mp + 1))
        return sorted(e for e in out if self.rational.den(e) == 0)

    def sign(self, d: int) -> int:
        return -1 if self.parity and d % 2 else 1

    def value(self, d: int) -> Fraction:
        return self.sign(d) * self.rational(d)

    def twist_factor(self, d: int) -> int:
        return -1 if self.twist and self.r % 2 == 0 and d % 2 else 1

    def factorial_value(self, d: int) -> Fraction:
        """(-1)^sum(d - mu'_i - 1) prod (d - mu'_i - 1)!/(d + mu_i)!, stable d only, no twist."""
        v = Fraction(1)
        for m, mp in zip(self.mu, self.mu_p):
            if d - mp - 1 < 0:
                raise ValueError(f"d = {d} is not in the stable range")
            if d + m < 0:
                return Fraction(0)
            v *= Fraction(factorial(d - mp - 1), factorial(d + m))
        return -v if sum(d - mp - 1 for mp in self.mu_p) % 2 else v

    def laurent(self, e: int, upto: int) -> Dict[int, Fraction]:
        """Laurent coefficients at x = e with the parity sign frozen at e."""
        s = self.sign(e)
        return {k: s * c for k, c in laurent_at(self.rational, e, upto).items()}

    def polynomial(self) -> UPoly:
        return polynomial_part(self.rational)

    def degree_at_infinity(self) -> int:
        return self.rational.num.deg - self.rational.den.deg


def fundamental_W(X: TotalAlgebra, beta_s: Sequence[int], d2: int, sign_twist: bool = False) -> FundW:
    if X.kind != "flop":
        raise ValueError("the fundamental rational function needs a double bundle")
    mu = tuple(cc.mus(X, beta_s))
    mup = tuple(d2 + m for m in cc.mus_p(X, beta_s))
    num, den = UPoly([1]), UPoly([1])
    const = 1
    for m, mp in zip(mu, mup):
        if (mp + 1) % 2:
            const = -const
        if m + mp >= 0:
            for t in range(-m, mp + 1):
                den = den * UPoly([-t, 1])
        else:
            for t in range(mp + 1, -m):
                num = num * UPoly([-t, 1])
    parity = 0 if sign_twist else (X.r + 1) % 2
    lo, hi = -max(mu), max(mup)
    return FundW(X.r, mu, mup, RatFuncQ1(num * UPoly([const]), den), parity, sign_twist, (lo, hi))


# ---------------------------------------------------------------------------
# Reg / Pri
# ---------------------------------------------------------------------------


@dataclass
class RegPri:
    e: int
    reg: Fraction
    principal: Dict[int, Fraction]  # k -> coefficient of (x - e)^-k


def rational_reg_pri(F: RatFuncQ1, e) -> RegPri:
    lau = laurent_at(F, e, 0)
    return RegPri(e, lau.get(0, Fraction(0)), {-k: c for k, c in lau.items() if k < 0 and c})


def reg_pri(W: FundW, e: int) -> RegPri:
    s = W.sign(e)
    rp = rational_reg_pri(W.rational, e)
    return RegPri(e, s * rp.reg, {k: s * c for k, c in rp.principal.items()})


def pri_value(rp: RegPri, x) -> Fraction:
    return principal_part_value(rp.principal, Fraction(rp.e), x)


def polynomial_part_identity(F: RatFuncQ1, e: int, poles: Sequence[int]) -> Tuple[bool, Fraction, Fraction]:
    """P(e) == Reg F(e) - sum_{e_j != e} Pri_{e_j} F(e), with P the polynomial part."""
    P = polynomial_part(F)
    lhs = P(e)
    rhs = rational_reg_pri(F, e).reg
    for ej in poles:
        if ej != e:
            rhs -= pri_value(rational_reg_pri(F, ej), e)
    return lhs == rhs, lhs, rhs


def residue_product(mu: int, mu_p: int, d: int) -> Fraction:
    """Residue of 1/prod_{j=-mu}^{mu'} (x - j) at x = d, as prod_{j != d} (-1)/(j - d)."""
    v = Fraction(1)
    for j in range(-mu, mu_p + 1):
        if j != d:
            v *= Fraction(-1, j - d)
    return v


# ---------------------------------------------------------------------------
# Laurent expansion through harmonic numbers
# ---------------------------------------------------------------------------


def _exp_series(c: Dict[int, Fraction], depth: int) -> List[Fraction]:
    """exp(sum_{k>=1} c_k u^k) truncated at u^depth."""
    out = [Fraction(0)] * (depth + 1)
    out[0] = Fraction(1)
    # f' = g' f, with g = sum c_k u^k
    for n in range(1, depth + 1):
        s = Fraction(0)
        for k in range(1, n + 1):
            ck = c.get(k)
            if ck:
                s += k * ck * out[n - k]
        out[n] = s / n
    return out


def harmonic_laurent(W: FundW, d: int, depth: int) -> Dict[int, Fraction]:
    """Laurent coefficients of W at x = d up to (x - d)^depth via harmonic numbers.

    Each factor is prod_{j in T} (x - j)^s with T an interval and s = -1
    (poles) or +1 (zeros).  Off the point d the factor contributes
    prod (d - j)^s * exp(s * sum_k (-1)^(k+1) u^k/k * sum_{t} t^-k) with
    t = d - j, and the t-sums are differences of directed harmonic numbers.
    """
    order = 0
    pref = Fraction(1)
    logc: Dict[int, Fraction] = {}
    const = W.rational.num.lead() / W.rational.den.lead()
    for m, mp in zip(W.mu, W.mu_p):
        if m + mp >= 0:
            lo, hi, s = -m, mp, -1
        elif m + mp <= -2:
            lo, hi, s = mp + 1, -m - 1, 1
        else:
            continue
        if lo <= d <= hi:
            order += s
        for j in range(lo, hi + 1):
            if j != d:
                pref *= Fraction(d - j) ** s
        # t = d - j runs over [d - hi, d - lo] minus 0
        for k in range(1, depth + 2 * len(W.mu) + 2):
            hk = HARMONIC.interval(d - hi, d - lo, k)
            if hk:
                logc[k] = logc.get(k, Fraction(0)) + s * Fraction((-1) ** (k + 1), k) * hk
    if depth - order < 0:
        return {}
    ser = _exp_series(logc, depth - order)
    sg = W.sign(d)
    out = {}
    for n, c in enumerate(ser):
        if c and n + order <= depth:
            out[n + order] = sg * const * pref * c
    return out


# ---------------------------------------------------------------------------
# the relative factor on formal symbols
# ---------------------------------------------------------------------------


class RelativeSeries:
    """z^{r+1} Q(x) I_{x l} at integers x = d, as polynomials in formal a_i, b_i.

    ``formal(d)[k]`` is the coefficient W_k(d) of z^k, a dict from exponent
    vectors (a_0..a_r, b_0..b_r, xi) to rationals.  Levels below ``kmin`` are
    dropped.
    """

    def __init__(self, X: TotalAlgebra, beta_s: Sequence[int], d2: int, kmin: int):
        self.X = X
        self.beta_s = tuple(beta_s)
        self.d2 = d2
        self.kmin = kmin
        self.ring = FormalRing(X)
        self.ring.maxdeg = X.r + 1 - kmin
        self.ops = DivisorOps(X)
        self._f: Dict[int, Dict[int, Formal]] = {}
        self._c: Dict[Tuple[int, int], CohClass] = {}

    def formal(self, d: int) -> Dict[int, Formal]:
        if d in self._f:
            return self._f[d]
        X, R = self.X, self.ring
        beta = cc.CurveClass(self.beta_s, d, self.d2)
        f = R.one()
        na, nb = cc.a_dot(X, beta), cc.b_dot(X, beta)
        for i, s in enumerate(na):
            f = R.directed(f, R.var("a", i), s)
        for i, s in enumerate(nb):
            f = R.directed(f, R.var("b", i), s)
        shift = X.r + 1 + sum(na) + sum(nb)
        out: Dict[int, Formal] = {}
        for (e, k), c in f.items():
            kk = k + shift
            if kk >= self.kmin:
                out.setdefault(kk, {})[e] = c
        self._f[d] = out
        return out

    def specialize(self, d: int, k: int) -> Fraction:
        """W_k(d) at a_i = 1, b_i = -1."""
        r1 = self.X.r + 1
        s = Fraction(0)
        for e, c in self.formal(d).get(k, {}).items():
            s += -c if sum(e[r1:2 * r1]) % 2 else c
        return s

    def cls(self, d: int, k: int) -> CohClass:
        key = (d, k)
        if key not in self._c:
            poly = self.formal(d).get(k, {})
            H = self.ring.project({(e, 0): c for e, c in poly.items()}, self.ops)
            self._c[key] = CohClass(self.X, H.terms.get(0, (Fraction(0),) * self.X.rank))
        return self._c[key]


# ---------------------------------------------------------------------------
# series compatibility
# ---------------------------------------------------------------------------


@dataclass
class CompatReport:
    d: int
    rows: List[Tuple[int, Fraction, Fraction, Fraction]]  # k, W_k specialized, w_k harmonic, w_k partial fractions
    expected_sign: int
    mismatches: List[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def leading_order(self) -> Tuple[Optional[int], Optional[int]]:
        a = max((k for k, x, _, _ in self.rows if x), default=None)
        b = max((k for k, _, y, _ in self.rows if y), default=None)
        return a, b


def compatibility_sign(W: FundW, d: int) -> int:
    """Sign s with W_k(d)|_{a=1,b=-1} = s * w_k(d).

    Pairing the a- and b-factors with the reflection formula gives
    (-1)^(r+1) against the frozen-parity expansion, so r odd has s = 1.
    """
    s = -1 if (W.r + 1) % 2 else 1
    if W.twist and W.r % 2 == 0:
        s *= -1 if d % 2 else 1
    return s


def series_compatibility(X: TotalAlgebra, beta_s: Sequence[int], d2: int, d: int, depth: int = 3,
                         sign_twist: bool = False, rel: Optional[RelativeSeries] = None) -> CompatReport:
    r = X.r
    W = fundamental_W(X, beta_s, d2, sign_twist)
    kmin = -depth
    if rel is None or rel.kmin > kmin:
        rel = RelativeSeries(X, beta_s, d2, kmin)
    hl = harmonic_laurent(W, d, depth)
    pf = W.laurent(d, depth)
    s = compatibility_sign(W, d)
    rep = CompatReport(d, [], s)
    for k in range(r + 1, kmin - 1, -1):
        Wk = rel.specialize(d, k)
        a, b = hl.get(-k, Fraction(0)), pf.get(-k, Fraction(0))
        rep.rows.append((k, Wk, a, b))
        if a != b or Wk != s * a:
            rep.mismatches.append(k)
    return rep


# ---------------------------------------------------------------------------
# quantized operators on the extremal series
# ---------------------------------------------------------------------------


def _cs_add(A: CSeries, B: CSeries, c=1) -> CSeries:
    out = dict(A)
    for k, v in B.items():
        out[k] = out[k] + v * c if k in out else v * c
    return {k: v for k, v in out.items() if not v.is_zero()}


def _cs_scale(A: CSeries, c) -> CSeries:
    c = Fraction(c)
    if not c:
        return {}
    return {k: v * c for k, v in A.items()}


def _cs_shift(A: CSeries, s: int) -> CSeries:
    return {k + s: v for k, v in A.items()}


class Fibre:
    """P1 / P2 bookkeeping for one (beta_S, d2) on one side of the flop."""

    def __init__(self, X: TotalAlgebra, beta_s: Sequence[int], d2: int, jmin: int = 0, sign_twist: bool = False):
        self.X = X
        self.r = X.r
        self.beta_s = tuple(beta_s)
        self.d2 = d2
        self.jmin = jmin
        self.rel = RelativeSeries(X, beta_s, d2, jmin)
        self.ext = RelativeSeries(X, (0,) * X.base.ngen, 0, jmin)
        self.W = fundamental_W(X, beta_s, d2, sign_twist)
        ops = DivisorOps(X)
        r1 = X.r + 1
        self.a = [ops.cls(ops.coeffs_of("a", i)) for i in range(r1)]
        self.b = [ops.cls(ops.coeffs_of("b", i)) for i in range(r1)]
        th = X.one()
        for b in self.b:
            th = th * b
        self.theta = th
        self.lo = -cc.mu_I(X, beta_s)
        self.hi = d2 + cc.mu_p_I(X, beta_s)
        self.lam = sum(cc.mus(X, beta_s)) + sum(cc.mus_p(X, beta_s)) + (X.r + 2) * d2
        self._ext: Dict[int, CSeries] = {}
        self._mono: Dict[Tuple[Tuple[int, ...], int], CSeries] = {}
        self._corr: Dict[int, CSeries] = {}

    # I_{m l} as a class series: level j holds W_{j+r+1}(m)
    def ext_series(self, m: int) -> CSeries:
        if m not in self._ext:
            out = {}
            for k in self.ext.formal(m):
                c = self.ext.cls(m, k)
                if not c.is_zero():
                    out[k - (self.r + 1)] = c
            self._ext[m] = out
        return self._ext[m]

    def _lin(self, S: CSeries, cls: CohClass, t: int) -> CSeries:
        """(cls + z t) S, truncated below jmin - (r+1)."""
        out: CSeries = {}
        floor = self.jmin - 2 * (self.r + 1)
        for k, v in S.items():
            p = v * cls
            if not p.is_zero():
                out[k] = out[k] + p if k in out else p
            if t and k + 1 >= floor:
                q = v * t
                out[k + 1] = out[k + 1] + q if k + 1 in out else q
        return {k: v for k, v in out.items() if not v.is_zero() and k >= floor}

    def quantized(self, exps: Tuple[int, ...], m: int) -> CSeries:
        """prod (a_i + z m)^alpha_i prod (b_j - z m)^beta_j applied to I_{m l}."""
        key = (exps, m)
        if key not in self._mono:
            r1 = self.r + 1
            S = self.ext_series(m)
            for i in range(r1):
                for _ in range(exps[i]):
                    S = self._lin(S, self.a[i], m)
                for _ in range(exps[r1 + i]):
                    S = self._lin(S, self.b[i], -m)
            self._mono[key] = S
        return self._mono[key]

    def a_product(self, m: int) -> CSeries:
        exps = (1,) * (self.r + 1) + (0,) * (self.r + 2)
        return self.quantized(exps, m)

    def theta_hat(self, m: int) -> CSeries:
        """prod z d_{b_j} - (-1)^(r+1) prod z d_{a_j}; prod a_j is already 0 in H(X)."""
        exps = (0,) * (self.r + 1) + (1,) * (self.r + 1) + (0,)
        sgn = -1 if (self.r + 1) % 2 else 1
        return _cs_add(self.quantized(exps, m), self.a_product(m), -sgn)

    def unstable(self) -> range:
        return range(self.lo, self.hi + 1)

    def p1_correction(self, D: int) -> CSeries:
        """sum_{k>=1, e} z^k q^e W^_k(e) I at q^D."""
        if D in self._corr:
            return self._corr[D]
        out: CSeries = {}
        for e in self.unstable():
            m = D - e
            if m < 0:
                continue
            fe = self.rel.formal(e)
            for k, poly in fe.items():
                if k < 1:
                    continue
                for exps, c in poly.items():
                    out = _cs_add(out, _cs_shift(self.quantized(exps, m), k), c)
        self._corr[D] = out
        return out

    def target(self, D: int) -> CSeries:
        out = {}
        for k in self.rel.formal(D):
            c = self.rel.cls(D, k)
            if not c.is_zero():
                out[k] = c
        return out

    def p1(self, D: int) -> CSeries:
        return _cs_add(self.target(D), self.p1_correction(D), -1)

    def theta_coefficient(self, c: CohClass) -> Optional[Fraction]:
        """t with c = t * Theta, or None."""
        return _coefficient(c, self.theta)

    def pri_formula(self, d: int) -> Fraction:
        """sum_{e<d} sum_k w_k(e) (-1)^((d-e-1)(r+1)) / (d-e)^k."""
        s = Fraction(0)
        for e in self.unstable():
            if e >= d:
                continue
            sg = -1 if ((d - e - 1) * (self.r + 1)) % 2 else 1
            for k in range(1, self.r + 2):
                w = self.rel.specialize(e, k)
                if w:
                    s += sg * w / Fraction(d - e) ** k
        return s


def _coefficient(c: CohClass, basis: CohClass) -> Optional[Fraction]:
    if basis.is_zero():
        return Fraction(0) if c.is_zero() else None
    i = next(n for n, x in enumerate(basis.v) if x)
    t = c.v[i] / basis.v[i]
    return t if c == basis * t else None


def interpolate(points: Sequence[Tuple[int, Fraction]]) -> UPoly:
    """Lagrange interpolation through all given points."""
    out = UPoly()
    for i, (xi, yi) in enumerate(points):
        if not yi:
            continue
        term = UPoly([yi])
        den = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j != i:
                term = term * UPoly([-xj, 1])
                den *= xi - xj
        out = out + term * UPoly([1 / den])
    return out


def fits_polynomial(points: Sequence[Tuple[int, Fraction]], deg: int) -> Tuple[bool, UPoly]:
    """Interpolate on the first deg+1 points and test the rest exactly."""
    if len(points) < deg + 2:
        raise ValueError("need at least deg + 2 points")
    P = interpolate(points[: deg + 1])
    return all(P(x) == y for x, y in points[deg + 1:]), P


# ---------------------------------------------------------------------------
# the Euler series
# ---------------------------------------------------------------------------


def theta_apply(P: UPoly, f: RatFuncQ1) -> RatFuncQ1:
    """P(q d/dq) f."""
    out = RatFuncQ1.const(0)
    g = f
    for c in P.c:
        if c:
            out = out + g * RatFuncQ1.const(c)
        g = g.theta()
    return out


def euler_identity(P: UPoly, r: int) -> Tuple[bool, RatFuncQ1]:
    """sum_{d in Z} s^(d-1) P(d) q^d = 0 with s = (-1)^(r+1), through f(q) + f(1/q) = (-1)^r.

    The positive half is P(theta) f(q); the negative half is (P(-theta) f)(1/q)
    since theta(g(1/q)) = -(theta g)(1/q).
    """
    f = f_basic(r)
    s = -1 if (r + 1) % 2 else 1
    Pm = UPoly([c if n % 2 == 0 else -c for n, c in enumerate(P.c)])
    total = theta_apply(P, f) + RatFuncQ1.const(s * P(0)) + theta_apply(Pm, f).substitute_inverse()
    return total.is_zero(), total


def stable_series_closed_form(P: UPoly, r: int, start: int) -> RatFuncQ1:
    """sum_{d >= start} s^(d-1) P(d) q^d as a rational function of q."""
    f = f_basic(r)
    s = -1 if (r + 1) % 2 else 1
    out = theta_apply(P, f)
    for d in range(1, start):
        out = out - RatFuncQ1.q1_power(d) * RatFuncQ1.const(s ** (d - 1) * P(d))
    for d in range(start, 1):
        out = out + RatFuncQ1.q1_power(d) * RatFuncQ1.const(Fraction(s) ** (d - 1) * P(d))
    return out


def truncated_stable_series(P: UPoly, r: int, start: int, depth: int) -> Dict[int, Fraction]:
    s = -1 if (r + 1) % 2 else 1
    return {d: Fraction(s) ** (d - 1) * P(d) for d in range(start, depth + 1) if P(d)}


def closed_form_agrees(P: UPoly, r: int, start: int, depth: int) -> bool:
    F = stable_series_closed_form(P, r, start)
    shift = max(0, -start)
    lau = (F * RatFuncQ1.q1_power(shift)).laurent(depth + shift)
    got = {k - shift: c for k, c in lau.items() if c and k - shift <= depth}
    return got == truncated_stable_series(P, r, start, depth)


# ---------------------------------------------------------------------------
# partial Birkhoff factorization, first step
# ---------------------------------------------------------------------------


def top_defect_sign(r: int) -> int:
    """Sign in T W_0(d) - W'_0(d) = sign * Reg W(d) * Theta'.

    Computed value is (-1)^r with T h = xi' - h' and
    Theta' = prod (c1(L_i) + xi' - h').
    """
    return -1 if r % 2 else 1


@dataclass
class BF1Report:
    beta_s: Tuple[int, ...]
    d2: int
    lam: int
    W: FundW
    stable_values: List[Tuple[int, Fraction]]
    polynomial: Optional[UPoly]
    stable_ok: Optional[bool]
    matches_polynomial_part: Optional[bool]
    degree_bound: int
    pri_formula_ok: bool
    flop_difference: List[Tuple[int, Optional[Fraction]]]
    flop_ok: bool
    top_defect: List[Tuple[int, Fraction, bool]]
    top_defect_ok: bool
    positive_levels_ok: bool
    clause_c: Optional[bool]
    euler_ok: bool
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        parts = [self.flop_ok, self.top_defect_ok, self.positive_levels_ok, self.euler_ok, self.pri_formula_ok]
        if self.stable_ok is not None:
            parts += [self.stable_ok, bool(self.matches_polynomial_part)]
        if self.clause_c is not None:
            parts.append(self.clause_c)
        return all(parts)

    def table(self) -> List[Dict[str, object]]:
        rows = []
        P = self.W.polynomial()
        for d in range(self.W.unstable[0] - 2, self.W.unstable[1] + 3):
            rp = reg_pri(self.W, d)
            rows.append({
                "d": str(d),
                "range": "unstable" if self.W.unstable[0] <= d <= self.W.unstable[1] else "stable",
                "Reg": str(rp.reg),
                "Pri": {str(k): str(c) for k, c in sorted(rp.principal.items())},
                "P": str(P(d)),
                "defect": next((str(v) for e, v, _ in self.top_defect if e == d), ""),
            })
        return rows


def _parity_sign(W: FundW, d: int) -> int:
    """Sign turning actual level-0 values into values of the polynomial part."""
    return -1 if (W.r + 1) % 2 and W.twist and d % 2 else 1


def partial_bf1(X: TotalAlgebra, beta_s: Sequence[int], d2: int, sign_twist: bool = False,
                npoints: Optional[int] = None, margin: int = 3) -> BF1Report:
    if X.kind != "flop":
        raise ValueError("partial Birkhoff factorization needs a flop scenario")
    Xp = X.flopped()
    F = Fibre(X, beta_s, d2, 0, sign_twist)
    Fp = Fibre(Xp, beta_s, d2, 0, sign_twist)
    W = F.W
    r = X.r
    lam = F.lam
    lo, hi = F.lo, F.hi
    P = W.polynomial()
    degree_bound = max(0, W.degree_at_infinity())
    notes: List[str] = []

    # (a) stable range on X
    stable_values: List[Tuple[int, Fraction]] = []
    stable_ok = matches = None
    n = npoints or degree_bound + 4
    if lam <= -(r + 1):
        bad = False
        for D in range(hi + 1, hi + 1 + n):
            t = F.theta_coefficient(F.p1(D).get(0, X.zero()))
            if t is None:
                bad = True
                notes.append(f"level-0 class at d={D} is not a multiple of Theta")
                break
            stable_values.append((D, _parity_sign(W, D) * t))
        if not bad:
            stable_ok, Pfit = fits_polynomial(stable_values, degree_bound)
            matches = stable_ok and Pfit == P
    # scalar shadow of the corrections against the explicit principal-part sum
    pri_ok = True
    for D in range(lo, hi + 1 + margin):
        corr = F.p1_correction(D).get(0, X.zero())
        t = F.theta_coefficient(corr)
        if t is None or t != F.pri_formula(D):
            pri_ok = False
    # (b) T-difference on the full range
    Ttheta = X.flop_map(F.theta, Xp)
    flop_diff: List[Tuple[int, Optional[Fraction]]] = []
    flop_ok = True
    for D in range(lo - margin, hi + margin + 1):
        LX = F.p1(D).get(0, X.zero())
        LXp = Fp.p1(d2 - D).get(0, Xp.zero())
        diff = X.flop_map(LX, Xp) - LXp
        t = _coefficient(diff, Ttheta)
        flop_diff.append((D, t))
        if t is None or _parity_sign(W, D) * t != P(D):
            flop_ok = False
    # top defect on the unstable range
    sgn = top_defect_sign(r)
    tp = Fp.theta
    defects = []
    top_ok = True
    for D in range(lo, hi + 1):
        diff = X.flop_map(F.rel.cls(D, 0), Xp) - Fp.rel.cls(d2 - D, 0)
        actual_reg = reg_pri(fundamental_W(X, beta_s, d2, False), D).reg
        good = diff == tp * (sgn * actual_reg)
        defects.append((D, actual_reg, good))
        top_ok = top_ok and good
    # positive levels are removed on each side, and (c) when lambda > -(r+1)
    pos_ok = True
    clause_c = None
    for D in range(lo - margin, hi + margin + 1):
        for k in range(1, r + 2):
            if not F.p1(D).get(k, X.zero()).is_zero() or not Fp.p1(d2 - D).get(k, Xp.zero()).is_zero():
                pos_ok = False
    if lam > -(r + 1):
        clause_c = True
        for D in range(lo - margin, hi + margin + 1):
            for k in range(max(1, lam + r + 1), r + 2):
                diff = X.flop_map(F.p1(D).get(k, X.zero()), Xp) - Fp.p1(d2 - D).get(k, Xp.zero())
                if not diff.is_zero():
                    clause_c = False
    euler_ok, _ = euler_identity(P, r)
    return BF1Report(tuple(beta_s), d2, lam, W, stable_values, P, stable_ok, matches, degree_bound, pri_ok,
                     flop_diff, flop_ok, defects, top_ok, pos_ok, clause_c, euler_ok, notes)


# ---------------------------------------------------------------------------
# second step
# ---------------------------------------------------------------------------


@dataclass
class BF2Report:
    beta_s: Tuple[int, ...]
    d2: int
    lam: int
    first_series: List[Tuple[int, bool]]
    naive_first_series: List[Tuple[int, bool]]
    trouble_coefficient: Optional[List[Fraction]]  # H_{d-1} part of the P1 residual
    trouble_expected: List[Fraction]  # -(c1 + c1') Theta P(d), per component and power of d
    p2_harmonic: Optional[List[Fraction]]  # H_{d-1} part left after the full second step
    residuals: List[Tuple[int, CohClass]] = field(default_factory=list)

    @property
    def first_series_vanishes(self) -> bool:
        return all(ok for _, ok in self.first_series)

    @property
    def trouble_term_ok(self) -> bool:
        return self.trouble_coefficient is not None and self.trouble_coefficient == self.trouble_expected

    @property
    def ok(self) -> bool:
        return self.first_series_vanishes and self.trouble_term_ok


class _P2:
    def __init__(self, F: Fibre):
        self.F = F
        self.W = F.W
        self.P = F.W.polynomial()
        self._cache: Dict[Tuple[int, bool], CSeries] = {}

    def unstable_correction(self, d: int) -> Fraction:
        L = self.F.p1(d).get(0, self.F.X.zero())
        t = _coefficient(L - self.F.rel.cls(d, 0), self.F.theta)
        if t is None:
            raise ValueError(f"P1 correction at d={d} is not a multiple of Theta")
        return -t

    def series(self, D: int, top_removal: bool = True) -> CSeries:
        key = (D, top_removal)
        if key in self._cache:
            return self._cache[key]
        F = self.F
        out = F.p1(D)
        for d in range(F.hi + 1, D + 1):
            pd = _parity_sign(self.W, d) * self.P(d)
            if pd:
                out = _cs_add(out, F.theta_hat(D - d), -pd)
        for d in F.unstable():
            m = D - d
            if m < 0:
                continue
            for exps, c in F.rel.formal(d).get(0, {}).items():
                out = _cs_add(out, F.quantized(exps, m), -c)
            if top_removal:
                w0 = F.rel.specialize(d, 0)
                if w0:
                    out = _cs_add(out, F.a_product(m), w0)
            corr = self.unstable_correction(d)
            if corr:
                out = _cs_add(out, F.theta_hat(m), corr)
        self._cache[key] = out
        return out


def _fit_rational_harmonic(values: Sequence[Tuple[int, Fraction]], poles: Sequence[int], pole_order: int,
                           num_deg: int, k_deg: int) -> Optional[Tuple[List[Fraction], List[Fraction]]]:
    """Solve v(D) = N(D)/den(D) + K(D) H_{D-1} with den = prod (D - e)^pole_order.

    Returns (N coefficients, K coefficients) if the overdetermined system is
    consistent, else None.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    nunk = num_deg + 1 + k_deg + 1
    if len(values) < nunk + 3:
        raise ValueError("not enough sample points for the residual fit")
    rows = []
    for D, v in values:
        den = Fraction(1)
        for e in poles:
            den *= Fraction(D - e) ** pole_order
        H = HARMONIC(D - 1, 1)
        row = [QQ(Fraction(D) ** i / den) for i in range(num_deg + 1)]
        row += [QQ(Fraction(D) ** i * H) for i in range(k_deg + 1)]
        row.append(QQ(v))
        rows.append(row)
    M = DomainMatrix(rows, (len(rows), nunk + 1), QQ)
    R, piv = M.rref()
    if nunk in piv:
        return None
    sol = [Fraction(0)] * nunk
    Rl = R.to_list()
    for i, p in enumerate(piv):
        sol[p] = Fraction(int(Rl[i][nunk].numerator), int(Rl[i][nunk].denominator))
    if len(piv) < nunk:
        return None
    return sol[: num_deg + 1], sol[num_deg + 1:]


def _harmonic_part(X: TotalAlgebra, W: FundW, samples: Sequence[Tuple[int, CohClass]], poles: Sequence[int],
                   pole_order: int, numdeg: int, kdeg: int) -> Optional[List[Fraction]]:
    out: List[Fraction] = []
    for comp in range(X.rank):
        vals = [(D, _parity_sign(W, D) * c.v[comp]) for D, c in samples]
        res = _fit_rational_harmonic(vals, poles, pole_order, numdeg, kdeg)
        if res is None:
            return None
        out.extend(res[1])
    return out


def partial_bf2(X: TotalAlgebra, beta_s: Sequence[int], d2: int, sign_twist: bool = False,
                npoints: int = 0, margin: int = 3) -> BF2Report:
    """Second step.  The unstable W_0 series is quantized with its extremal
    top symbol removed through prod a_j = 0, as is done for Theta^.

    The second stable series (level -1) is fitted on stable d as a rational
    function of d plus K(d) H_{d-1}.  K is compared with -(c1 + c1') Theta P(d)
    for the P1 residual and reported for the full second step.
    """
    if X.kind != "flop":
        raise ValueError("partial Birkhoff factorization needs a flop scenario")
    F = Fibre(X, beta_s, d2, -1, sign_twist)
    r = X.r
    if -F.lam - (r + 1) < 1:
        raise ValueError("second step needs -lambda - (r+1) >= 1")
    P2 = _P2(F)
    first, naive = [], []
    for D in range(F.lo - margin, F.hi + margin + 4):
        first.append((D, P2.series(D).get(0, X.zero()).is_zero()))
        naive.append((D, P2.series(D, top_removal=False).get(0, X.zero()).is_zero()))
    poles = list(range(min(F.lo, 0) - 1, max(F.hi, 0) + 1))
    pole_order = r + 2
    P = F.W.polynomial()
    kdeg = P.deg + 1 if not P.is_zero() else 1
    numdeg = pole_order * len(poles) + kdeg + 1
    npts = max(npoints, numdeg + kdeg + 8)
    start = max(F.hi, poles[-1]) + 1
    p1_samples, p2_samples = [], []
    for D in range(start, start + npts):
        p1_samples.append((D, F.p1(D).get(-1, X.zero())))
        p2_samples.append((D, P2.series(D).get(-1, X.zero())))
    ops = DivisorOps(X)
    ng = X.base.ngen
    c1 = [sum(m[g] for m in X.mu) + sum(m[g] for m in X.mu_p) for g in range(ng)]
    Kcls = ops.cls((0, 0) + tuple(c1)) * F.theta * (-1) if ng else X.zero()
    pc = list(P.c) + [Fraction(0)] * (kdeg + 1)
    expected = [Kcls.v[comp] * pc[i] for comp in range(X.rank) for i in range(kdeg + 1)]
    K1 = _harmonic_part(X, F.W, p1_samples, poles, pole_order, numdeg, kdeg)
    K2 = _harmonic_part(X, F.W, p2_samples, poles, pole_order, numdeg, kdeg)
    return BF2Report(tuple(beta_s), d2, F.lam, first, naive, K1, expected, K2, p2_samples)
