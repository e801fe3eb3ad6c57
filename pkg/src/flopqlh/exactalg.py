"""Exact scalar arithmetic.

Rationals are ``fractions.Fraction``.  On top of them this module builds
univariate polynomials and rational functions in the fibre Novikov variable
``q1`` and the coefficient ring ``CoeffElem`` of Laurent monomials in
``z``, ``q2`` and the base Novikov variables with ``RatFuncQ1`` values.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import zip_longest
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

Rational = Fraction


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


# ---------------------------------------------------------------------------
# univariate polynomials
# ---------------------------------------------------------------------------


def _trim(cs: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


class UPoly:
    """Dense univariate polynomial over Q, coefficients stored low to high."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        self.c = _trim(frac(x) for x in coeffs)

    @classmethod
    def const(cls, a) -> "UPoly":
        return cls([a])

    @classmethod
    def monomial(cls, n: int, a=1) -> "UPoly":
        return cls([0] * n + [a])

    @property
    def deg(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def lead(self) -> Fraction:
        return self.c[-1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, UPoly):
            other = UPoly.const(other)
        return self.c == other.c

    def __hash__(self) -> int:
        return hash(self.c)

    def __add__(self, other: "UPoly") -> "UPoly":
        if not isinstance(other, UPoly):
            other = UPoly.const(other)
        return UPoly(a + b for a, b in zip_longest(self.c, other.c, fillvalue=0))

    __radd__ = __add__

    def __neg__(self) -> "UPoly":
        return UPoly(-a for a in self.c)

    def __sub__(self, other: "UPoly") -> "UPoly":
        if not isinstance(other, UPoly):
            other = UPoly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "UPoly":
        return UPoly.const(other) - self

    def __mul__(self, other: "UPoly") -> "UPoly":
        if not isinstance(other, UPoly):
            other = frac(other)
            return UPoly(a * other for a in self.c)
        if not self.c or not other.c:
            return UPoly()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(other.c):
                    out[i + j] += a * b
        return UPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "UPoly":
        out = UPoly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def divmod(self, other: "UPoly") -> Tuple["UPoly", "UPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        q = [Fraction(0)] * max(len(rem) - len(other.c) + 1, 0)
        lead = other.c[-1]
        dn = len(other.c) - 1
        for k in range(len(rem) - 1, dn - 1, -1):
            coef = rem[k] / lead
            if coef:
                q[k - dn] = coef
                for j, b in enumerate(other.c):
                    rem[k - dn + j] -= coef * b
        return UPoly(q), UPoly(rem[:dn] if dn else [])

    def __floordiv__(self, other: "UPoly") -> "UPoly":
        return self.divmod(other)[0]

    def __mod__(self, other: "UPoly") -> "UPoly":
        return self.divmod(other)[1]

    def monic(self) -> "UPoly":
        return self * (1 / self.lead())

    def deriv(self) -> "UPoly":
        return UPoly(i * a for i, a in enumerate(self.c) if i)

    def __call__(self, x):
        acc = 0
        for a in reversed(self.c):
            acc = acc * x + a
        return acc

    def shift(self, e) -> "UPoly":
        """Return p(x + e)."""
        out = UPoly()
        lin = UPoly([e, 1])
        for a in reversed(self.c):
            out = out * lin + UPoly.const(a)
        return out

    def reverse(self, n: int) -> "UPoly":
        """Return x^n p(1/x); requires n >= deg."""
        cs = list(self.c) + [Fraction(0)] * (n + 1 - len(self.c))
        return UPoly(reversed(cs))

    def valuation(self) -> int:
        for i, a in enumerate(self.c):
            if a:
                return i
        raise ValueError("valuation of zero polynomial")

    def __repr__(self) -> str:
        return f"UPoly({[str(a) for a in self.c]})"

    def to_str(self, var: str = "q1") -> str:
        if not self.c:
            return "0"
        parts: List[str] = []
        for i in range(len(self.c) - 1, -1, -1):
            a = self.c[i]
            if not a:
                continue
            if i == 0:
                mono = ""
            elif i == 1:
                mono = var
            else:
                mono = f"{var}^{i}"
            if mono and abs(a) == 1:
                term = mono
            elif mono:
                term = f"{abs(a)}*{mono}"
            else:
                term = str(abs(a))
            sign = "-" if a < 0 else "+"
            parts.append((sign, term))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, term in parts[1:]:
            s += f" {sign} {term}"
        return s


def upoly_gcd(a: UPoly, b: UPoly) -> UPoly:
    while not b.is_zero():
        a, b = b, a % b
    if a.is_zero():
        return a
    return a.monic()


# ---------------------------------------------------------------------------
# rational functions in q1
# ---------------------------------------------------------------------------


class RatFuncQ1:
    """Reduced rational function num/den in q1 with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, _reduced: bool = False):
        if not isinstance(num, UPoly):
            num = UPoly.const(num)
        if den is None:
            den = UPoly.const(1)
        elif not isinstance(den, UPoly):
            den = UPoly.const(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if not _reduced:
            if num.is_zero():
                den = UPoly.const(1)
            else:
                g = upoly_gcd(num, den)
                if g.deg > 0:
                    num, den = num // g, den // g
                lc = den.lead()
                if lc != 1:
                    num, den = num * (1 / lc), den * (1 / lc)
        self.num = num
        self.den = den

    @classmethod
    def q1(cls) -> "RatFuncQ1":
        return cls(UPoly([0, 1]))

    @classmethod
    def q1_power(cls, n: int) -> "RatFuncQ1":
        if n >= 0:
            return cls(UPoly.monomial(n), _reduced=True)
        return cls(UPoly.const(1), UPoly.monomial(-n), _reduced=True)

    @classmethod
    def const(cls, a) -> "RatFuncQ1":
        return cls(UPoly.const(a), _reduced=True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.deg == 0

    def is_const(self) -> bool:
        return self.den.deg == 0 and self.num.deg <= 0

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant")
        return self.num.c[0] if self.num.c else Fraction(0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatFuncQ1):
            other = RatFuncQ1.const(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def _coerce(self, other) -> "RatFuncQ1":
        return other if isinstance(other, RatFuncQ1) else RatFuncQ1.const(other)

    def __add__(self, other) -> "RatFuncQ1":
        other = self._coerce(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.den == other.den:
            return RatFuncQ1(self.num + other.num, self.den)
        return RatFuncQ1(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFuncQ1":
        return RatFuncQ1(-self.num, self.den, _reduced=True)

    def __sub__(self, other) -> "RatFuncQ1":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RatFuncQ1":
        return self._coerce(other) - self

    def __mul__(self, other) -> "RatFuncQ1":
        if not isinstance(other, RatFuncQ1):
            a = frac(other)
            if a == 0:
                return RatFuncQ1.const(0)
            return RatFuncQ1(self.num * a, self.den, _reduced=True)
        if self.is_zero() or other.is_zero():
            return RatFuncQ1.const(0)
        if self.den.deg == 0 and other.den.deg == 0:
            return RatFuncQ1(self.num * other.num, _reduced=True)
        return RatFuncQ1(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFuncQ1":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RatFuncQ1(self.den, self.num)

    def __truediv__(self, other) -> "RatFuncQ1":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "RatFuncQ1":
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "RatFuncQ1":
        if n < 0:
            return self.inverse() ** (-n)
        return RatFuncQ1(self.num ** n, self.den ** n, _reduced=True)

    def theta(self) -> "RatFuncQ1":
        """q1 d/dq1."""
        n, d = self.num, self.den
        top = (n.deriv() * d - n * d.deriv()) * UPoly([0, 1])
        return RatFuncQ1(top, d * d)

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def laurent(self, upto: int) -> Dict[int, Fraction]:
        """Expansion at q1 = 0, exponents <= upto."""
        if self.is_zero():
            return {}
        v = self.den.valuation()
        den = UPoly(self.den.c[v:])
        num = self.num
        inv0 = 1 / den.c[0]
        n = upto + v
        if n < 0:
            return {}
        series = [Fraction(0)] * (n + 1)
        work = list(num.c[: n + 1]) + [Fraction(0)] * max(0, n + 1 - len(num.c))
        for k in range(n + 1):
            a = work[k] * inv0
            series[k] = a
            if a:
                for j in range(1, min(len(den.c), n + 1 - k)):
                    work[k + j] -= a * den.c[j]
        return {k - v: a for k, a in enumerate(series) if a}

    def substitute_inverse(self) -> "RatFuncQ1":
        return substitute_inverse(self)

    def to_str(self, var: str = "q1") -> str:
        if self.den.deg == 0:
            return self.num.to_str(var)
        return f"({self.num.to_str(var)})/({self.den.to_str(var)})"

    def __repr__(self) -> str:
        return f"RatFuncQ1({self.to_str()})"


def f_basic(r: int) -> RatFuncQ1:
    """q1 / (1 - (-1)^(r+1) q1)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    s = -1 if (r + 1) % 2 == 0 else 1
    return RatFuncQ1(UPoly([0, 1]), UPoly([1, s]))


def substitute_inverse(f: RatFuncQ1) -> RatFuncQ1:
    """g with g(q1) = f(1/q1)."""
    n = max(f.num.deg, f.den.deg, 0)
    num = f.num.reverse(n) if not f.num.is_zero() else UPoly()
    return RatFuncQ1(num, f.den.reverse(n))


def polynomial_part(f: RatFuncQ1) -> UPoly:
    return f.num.divmod(f.den)[0]


def _pole_order(den: UPoly, e: Fraction) -> int:
    lin = UPoly([-e, 1])
    k = 0
    while den.deg > 0:
        q, rem = den.divmod(lin)
        if not rem.is_zero():
            break
        den = q
        k += 1
    return k


def partial_fractions(f: RatFuncQ1, poles: Sequence) -> Dict[Fraction, Dict[int, Fraction]]:
    """Principal parts of f at the given poles.

    Returns ``{e: {k: c_k}}`` meaning ``sum_k c_k / (x - e)^k``.  Raises
    ``ValueError`` if the denominator has a root outside ``poles``.
    """
    poles = [frac(e) for e in poles]
    den = f.den
    orders: Dict[Fraction, int] = {}
    rest = den
    for e in poles:
        k = _pole_order(rest, e)
        if k:
            orders[e] = k
            rest = rest // (UPoly([-e, 1]) ** k)
    if rest.deg > 0:
        raise ValueError("denominator has roots outside the supplied pole list")
    out: Dict[Fraction, Dict[int, Fraction]] = {}
    for e, k in orders.items():
        # f = g(x)/(x-e)^k with g regular at e; Taylor coefficients of g at e
        g_den = den // (UPoly([-e, 1]) ** k)
        g_num = f.num.shift(e)
        g_den_s = g_den.shift(e)
        g = RatFuncQ1(g_num, g_den_s)
        taylor = g.laurent(k - 1)
        part = {}
        for j in range(k):
            c = taylor.get(j, Fraction(0))
            if c:
                part[k - j] = c
        if part:
            out[e] = part
    return out


def principal_part_value(part: Mapping[int, Fraction], e: Fraction, x) -> Fraction:
    return sum((c / (frac(x) - e) ** k for k, c in part.items()), Fraction(0))


def laurent_at(f: RatFuncQ1, e, upto: int) -> Dict[int, Fraction]:
    """Laurent coefficients of f in powers of (x - e), exponents <= upto."""
    e = frac(e)
    g = RatFuncQ1(f.num.shift(e), f.den.shift(e))
    return g.laurent(upto)


def reg_value(f: RatFuncQ1, e) -> Fraction:
    """Constant term of the Laurent expansion at e."""
    return laurent_at(f, e, 0).get(0, Fraction(0))


# ---------------------------------------------------------------------------
# CoeffElem
# ---------------------------------------------------------------------------

Mono = Tuple[int, int, Tuple[int, ...]]  # (z, q2, base exponents)


def _mono_add(a: Mono, b: Mono) -> Mono:
    return (a[0] + b[0], a[1] + b[1], tuple(x + y for x, y in zip(a[2], b[2])))


class CoeffElem:
    """Finite sum of z^a q2^b qbar^c * f(q1), f a RatFuncQ1.

    Exponents are integers; a negative q2 or base exponent records the offset
    coming from a lifted curve class.
    """

    __slots__ = ("terms", "nbase")

    def __init__(self, terms: Mapping[Mono, RatFuncQ1] | None = None, nbase: int = 0):
        self.nbase = nbase
        clean: Dict[Mono, RatFuncQ1] = {}
        if terms:
            for k, v in terms.items():
                if not isinstance(v, RatFuncQ1):
                    v = RatFuncQ1.const(v)
                if not v.is_zero():
                    clean[k] = v
        self.terms = clean

    @classmethod
    def zero(cls, nbase: int = 0) -> "CoeffElem":
        return cls({}, nbase)

    @classmethod
    def one(cls, nbase: int = 0) -> "CoeffElem":
        return cls({(0, 0, (0,) * nbase): RatFuncQ1.const(1)}, nbase)

    @classmethod
    def monomial(cls, z: int = 0, q2: int = 0, base: Sequence[int] = (), f=1, nbase: int | None = None) -> "CoeffElem":
        base = tuple(base)
        if nbase is None:
            nbase = len(base)
        base = base + (0,) * (nbase - len(base))
        if not isinstance(f, RatFuncQ1):
            f = RatFuncQ1.const(f)
        return cls({(z, q2, base): f}, nbase)

    @classmethod
    def scalar(cls, f, nbase: int = 0) -> "CoeffElem":
        return cls.monomial(0, 0, (0,) * nbase, f, nbase)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoeffElem):
            other = CoeffElem.scalar(other, self.nbase)
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def _coerce(self, other) -> "CoeffElem":
        if isinstance(other, CoeffElem):
            return other
        return CoeffElem.scalar(other, self.nbase)

    def __add__(self, other) -> "CoeffElem":
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            if k in out:
                s = out[k] + v
                if s.is_zero():
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = v
        return CoeffElem(out, max(self.nbase, other.nbase))

    __radd__ = __add__

    def __neg__(self) -> "CoeffElem":
        return CoeffElem({k: -v for k, v in self.terms.items()}, self.nbase)

    def __sub__(self, other) -> "CoeffElem":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "CoeffElem":
        return self._coerce(other) - self

    def __mul__(self, other) -> "CoeffElem":
        if not isinstance(other, CoeffElem):
            if isinstance(other, RatFuncQ1):
                return CoeffElem({k: v * other for k, v in self.terms.items()}, self.nbase)
            a = frac(other)
            if a == 0:
                return CoeffElem.zero(self.nbase)
            return CoeffElem({k: v * a for k, v in self.terms.items()}, self.nbase)
        out: Dict[Mono, RatFuncQ1] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = _mono_add(k1, k2)
                p = v1 * v2
                if k in out:
                    out[k] = out[k] + p
                else:
                    out[k] = p
        return CoeffElem(out, max(self.nbase, other.nbase))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "CoeffElem":
        out = CoeffElem.one(self.nbase)
        for _ in range(n):
            out = out * self
        return out

    def map_values(self, fn) -> "CoeffElem":
        return CoeffElem({k: fn(v) for k, v in self.terms.items()}, self.nbase)

    def z_degree_range(self) -> Tuple[int, int]:
        zs = [k[0] for k in self.terms]
        return (min(zs), max(zs)) if zs else (0, 0)

    def z_part(self, n: int) -> "CoeffElem":
        return CoeffElem({k: v for k, v in self.terms.items() if k[0] == n}, self.nbase)

    def weights(self) -> set:
        return {(k[2], k[1]) for k in self.terms}

    def weight_part(self, w) -> "CoeffElem":
        base, q2 = w
        return CoeffElem({k: v for k, v in self.terms.items() if k[2] == tuple(base) and k[1] == q2}, self.nbase)

    def theta(self, direction: str, index: int = 0) -> "CoeffElem":
        """Logarithmic derivative along t1 ('t1'), t2 ('t2') or a base direction ('base')."""
        out: Dict[Mono, RatFuncQ1] = {}
        for k, v in self.terms.items():
            if direction == "t1":
                nv = v.theta()
            elif direction == "t2":
                nv = v * k[1]
            elif direction == "base":
                nv = v * k[2][index]
            else:
                raise ValueError(direction)
            if not nv.is_zero():
                out[k] = nv
        return CoeffElem(out, self.nbase)

    def is_z_free(self) -> bool:
        return all(k[0] == 0 for k in self.terms)

    def subs_flop(self) -> "CoeffElem":
        """q1 -> 1/q1', q2 -> q1' q2', base fixed."""
        out = CoeffElem.zero(self.nbase)
        for k, v in self.terms.items():
            g = substitute_inverse(v) * RatFuncQ1.q1_power(k[1])
            out = out + CoeffElem({k: g}, self.nbase)
        return out

    def to_json(self) -> Dict[str, str]:
        """Stable mapping 'z^a*q2^b*qb^(c..)' -> 'num/den' (keys sorted by exponents)."""
        out: Dict[str, str] = {}
        for k in sorted(self.terms):
            v = self.terms[k]
            key = f"z{k[0]}|q2{k[1]}|qb" + ",".join(str(x) for x in k[2])
            out[key] = f"{v.num.to_str()}/{v.den.to_str()}" if v.den.deg > 0 else v.num.to_str()
        return out

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda m: (m[2], m[1], m[0])):
            v = self.terms[k]
            mono = []
            if k[0]:
                mono.append("z" if k[0] == 1 else f"z^{k[0]}")
            if k[1]:
                mono.append("q2" if k[1] == 1 else f"q2^{k[1]}")
            for i, e in enumerate(k[2]):
                if e:
                    nm = "qb" if len(k[2]) == 1 else f"qb{i}"
                    mono.append(nm if e == 1 else f"{nm}^{e}")
            vs = v.to_str()
            if mono:
                if vs == "1":
                    parts.append("*".join(mono))
                elif vs == "-1":
                    parts.append("-" + "*".join(mono))
                else:
                    parts.append(f"({vs})*" + "*".join(mono))
            else:
                parts.append(vs)
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"CoeffElem({self.to_str()})"


def iter_terms(c: CoeffElem) -> Iterator[Tuple[Mono, RatFuncQ1]]:
    return iter(sorted(c.terms.items()))
