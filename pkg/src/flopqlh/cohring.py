"""Cohomology rings H(S) and H(X) for split projective and double bundles.

``H(X) = H(S)[h, xi] / (prod(h + L_i), xi * prod(xi - h + L'_i))`` in the
flop case and ``H(S)[h] / prod(h + L_i)`` for a single projective bundle.
Elements are coefficient vectors over the canonical basis ``Tbar_i h^l xi^m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

Key = Tuple[int, int, int]  # (base index, h power, xi power)
Poly = Dict[Key, Fraction]


@dataclass(frozen=True)
class BaseAlgebra:
    """Even-degree cohomology of the base with its small quantum product.

    ``divisors[g]`` is the basis index of the H^2 class dual to curve
    generator ``g``.  ``qde`` lists ``(i, j, k, s, c)`` meaning that the
    quantum product ``Tbar_i * Tbar_j`` contains ``c * qbar^s * Tbar_k``.
    """

    name: str
    names: Tuple[str, ...]
    degrees: Tuple[int, ...]
    mult: Tuple[Tuple[int, int, int, Fraction], ...]
    integral: Tuple[Fraction, ...]
    divisors: Tuple[int, ...]
    c1: Tuple[Fraction, ...]
    qde: Tuple[Tuple[int, int, int, Tuple[int, ...], Fraction], ...] = ()

    @property
    def rank(self) -> int:
        return len(self.names)

    @property
    def ngen(self) -> int:
        return len(self.divisors)

    @property
    def dim(self) -> int:
        return max(self.degrees)

    @cached_property
    def table(self) -> Dict[Tuple[int, int], Dict[int, Fraction]]:
        t: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
        for i, j, k, c in self.mult:
            t.setdefault((i, j), {})[k] = Fraction(c)
        return t

    def product(self, i: int, j: int) -> Dict[int, Fraction]:
        return self.table.get((i, j), {})

    def pairing(self, i: int, j: int) -> Fraction:
        return sum((c * self.integral[k] for k, c in self.product(i, j).items()), Fraction(0))

    def c1_degree(self, beta_s: Sequence[int]) -> int:
        """c1(S).beta_S."""
        return int(sum(self.c1[self.divisors[g]] * b for g, b in enumerate(beta_s)))

    def check(self) -> None:
        n = self.rank
        for i in range(n):
            for j in range(n):
                if self.product(i, j) != self.product(j, i):
                    raise ValueError("base product not commutative")
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    left: Dict[int, Fraction] = {}
                    for a, c in self.product(i, j).items():
                        for b, d in self.product(a, k).items():
                            left[b] = left.get(b, 0) + c * d
                    right: Dict[int, Fraction] = {}
                    for a, c in self.product(j, k).items():
                        for b, d in self.product(i, a).items():
                            right[b] = right.get(b, 0) + c * d
                    if {x: v for x, v in left.items() if v} != {x: v for x, v in right.items() if v}:
                        raise ValueError("base product not associative")


def point_base() -> BaseAlgebra:
    return BaseAlgebra(
        name="point",
        names=("1",),
        degrees=(0,),
        mult=((0, 0, 0, Fraction(1)),),
        integral=(Fraction(1),),
        divisors=(),
        c1=(Fraction(0),),
    )


def p1_base() -> BaseAlgebra:
    return BaseAlgebra(
        name="p1",
        names=("1", "p"),
        degrees=(0, 1),
        mult=((0, 0, 0, Fraction(1)), (0, 1, 1, Fraction(1)), (1, 0, 1, Fraction(1))),
        integral=(Fraction(0), Fraction(1)),
        divisors=(1,),
        c1=(Fraction(0), Fraction(2)),
        qde=((1, 1, 0, (1,), Fraction(1)),),
    )


def base_from_table(data: dict) -> BaseAlgebra:
    """Build a base algebra from explicit structure-constant data."""
    names = tuple(data["names"])
    mult = tuple((int(i), int(j), int(k), Fraction(str(c))) for i, j, k, c in data["mult"])
    qde = tuple(
        (int(i), int(j), int(k), tuple(int(x) for x in s), Fraction(str(c))) for i, j, k, s, c in data.get("qde", [])
    )
    b = BaseAlgebra(
        name=data.get("name", "table"),
        names=names,
        degrees=tuple(int(d) for d in data["degrees"]),
        mult=mult,
        integral=tuple(Fraction(str(x)) for x in data["integral"]),
        divisors=tuple(int(x) for x in data["divisors"]),
        c1=tuple(Fraction(str(x)) for x in data["c1"]),
        qde=qde,
    )
    b.check()
    return b


class CohClass:
    """Vector of rationals over the canonical basis of a ``TotalAlgebra``."""

    __slots__ = ("alg", "v")

    def __init__(self, alg: "TotalAlgebra", v: Sequence):
        if len(v) != alg.rank:
            raise ValueError("length does not match algebra rank")
        self.alg = alg
        self.v = tuple(Fraction(x) for x in v)

    def __add__(self, other: "CohClass") -> "CohClass":
        return CohClass(self.alg, [a + b for a, b in zip(self.v, other.v)])

    def __sub__(self, other: "CohClass") -> "CohClass":
        return CohClass(self.alg, [a - b for a, b in zip(self.v, other.v)])

    def __neg__(self) -> "CohClass":
        return CohClass(self.alg, [-a for a in self.v])

    def __mul__(self, other) -> "CohClass":
        if isinstance(other, CohClass):
            return self.alg.mul(self, other)
        c = Fraction(other)
        return CohClass(self.alg, [a * c for a in self.v])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, CohClass) and self.alg is other.alg and self.v == other.v

    def __hash__(self) -> int:
        return hash(self.v)

    def is_zero(self) -> bool:
        return not any(self.v)

    def __repr__(self) -> str:
        return f"CohClass({self.alg.format_vector(self.v)})"


class TotalAlgebra:
    """H(X) for a split double bundle (``kind='flop'``) or projective bundle.

    ``mu[i]`` and ``mu_p[i]`` are the degree vectors of ``L_i`` and ``L'_i``
    over the base curve generators, so ``c1(L_i) = sum_g mu[i][g] D_g``.
    """

    def __init__(self, base: BaseAlgebra, r: int, mu: Sequence[Sequence[int]], mu_p: Sequence[Sequence[int]] = (), kind: str = "flop"):
        if r < 1:
            raise ValueError("r must be >= 1")
        if kind not in ("flop", "bundle"):
            raise ValueError("kind must be 'flop' or 'bundle'")
        self.base = base
        self.r = r
        self.kind = kind
        self.mu = tuple(tuple(int(x) for x in m) for m in mu)
        self.mu_p = tuple(tuple(int(x) for x in m) for m in mu_p)
        if len(self.mu) != r + 1 or any(len(m) != base.ngen for m in self.mu):
            raise ValueError("mu must have r+1 entries of length ngen")
        if kind == "flop" and (len(self.mu_p) != r + 1 or any(len(m) != base.ngen for m in self.mu_p)):
            raise ValueError("mu_p must have r+1 entries of length ngen")
        mmax = r + 1 if kind == "flop" else 0
        keys = [(i, l, m) for i in range(base.rank) for l in range(r + 1) for m in range(mmax + 1)]
        keys.sort(key=lambda k: (base.degrees[k[0]] + k[1] + k[2], -k[1], -k[2], -k[0]))
        self.keys: List[Key] = keys
        self.index: Dict[Key, int] = {k: n for n, k in enumerate(keys)}
        self.mmax = mmax
        self._f_rel = self._chern_relation_h()
        self._g_rel = self._chern_relation_xi() if kind == "flop" else None
        self._mulcache: Dict[Tuple[int, int], Tuple[Tuple[int, Fraction], ...]] = {}

    # -- raw polynomial helpers (unreduced, base classes multiplied exactly)

    def _pmul(self, a: Poly, b: Poly) -> Poly:
        out: Poly = {}
        for (i, l, m), c in a.items():
            for (j, l2, m2), d in b.items():
                for k, e in self.base.product(i, j).items():
                    key = (k, l + l2, m + m2)
                    out[key] = out.get(key, Fraction(0)) + c * d * e
        return {k: v for k, v in out.items() if v}

    def _padd(self, a: Poly, b: Poly, s: Fraction = Fraction(1)) -> Poly:
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, Fraction(0)) + s * v
        return {k: v for k, v in out.items() if v}

    def base_divisor_poly(self, degs: Sequence[int]) -> Poly:
        out: Poly = {}
        for g, d in enumerate(degs):
            if d:
                key = (self.base.divisors[g], 0, 0)
                out[key] = out.get(key, Fraction(0)) + d
        return out

    def a_poly(self, i: int) -> Poly:
        return self._padd({(0, 1, 0): Fraction(1)}, self.base_divisor_poly(self.mu[i]))

    def b_poly(self, i: int) -> Poly:
        p = {(0, 0, 1): Fraction(1), (0, 1, 0): Fraction(-1)}
        return self._padd(p, self.base_divisor_poly(self.mu_p[i]))

    def _chern_relation_h(self) -> Poly:
        f: Poly = {(0, 0, 0): Fraction(1)}
        for i in range(self.r + 1):
            f = self._pmul(f, self.a_poly(i))
        return f

    def _chern_relation_xi(self) -> Poly:
        g: Poly = {(0, 0, 1): Fraction(1)}
        for i in range(self.r + 1):
            g = self._pmul(g, self.b_poly(i))
        return g

    def f_F(self) -> Poly:
        return dict(self._f_rel)

    def f_N(self) -> Poly:
        return dict(self._g_rel or {})

    def reduce(self, p: Poly, order: str = "h-first") -> List[Fraction]:
        """Normal form of a polynomial in Tbar, h, xi as a canonical vector."""
        p = {k: v for k, v in p.items() if v}
        r = self.r
        while True:
            bad_h = [k for k in p if k[1] > r]
            bad_x = [k for k in p if k[2] > self.mmax]
            if order == "h-first":
                pick = bad_h or bad_x
            else:
                pick = bad_x or bad_h
            if not pick:
                break
            if pick is bad_h:
                k = max(bad_h, key=lambda t: (t[2], t[1]))
                c = p[k]
                shift = {(k[0], k[1] - r - 1, k[2]): c}
                p = self._padd(p, self._pmul(shift, self._f_rel), Fraction(-1))
            else:
                k = max(bad_x, key=lambda t: (t[2], t[1]))
                c = p[k]
                rel = self._g_rel if self.kind == "flop" else {(0, 0, 1): Fraction(1)}
                shift = {(k[0], k[1], k[2] - self.mmax - 1): c}
                p = self._padd(p, self._pmul(shift, rel), Fraction(-1))
        v = [Fraction(0)] * self.rank
        for k, c in p.items():
            v[self.index[k]] += c
        return v

    # -- public API

    @property
    def rank(self) -> int:
        return len(self.keys)

    def basis_name(self, n: int) -> str:
        i, l, m = self.keys[n]
        parts = []
        if l:
            parts.append("h" if l == 1 else f"h^{l}")
        if m:
            parts.append("xi" if m == 1 else f"xi^{m}")
        bn = self.base.names[i]
        if bn != "1":
            parts.append(bn)
        return "*".join(parts) if parts else "1"

    def basis_names(self) -> List[str]:
        return [self.basis_name(n) for n in range(self.rank)]

    def degree(self, n: int) -> int:
        i, l, m = self.keys[n]
        return self.base.degrees[i] + l + m

    @property
    def dim(self) -> int:
        return self.base.dim + self.r + (self.r + 1 if self.kind == "flop" else 0)

    def zero(self) -> CohClass:
        return CohClass(self, [0] * self.rank)

    def one(self) -> CohClass:
        return self.basis(0)

    def basis(self, n: int) -> CohClass:
        v = [0] * self.rank
        v[n] = 1
        return CohClass(self, v)

    def from_poly(self, p: Poly) -> CohClass:
        return CohClass(self, self.reduce(p))

    def element(self, h: int = 0, xi: int = 0, base: int = 0, coeff=1) -> CohClass:
        return self.from_poly({(base, h, xi): Fraction(coeff)})

    def h(self) -> CohClass:
        return self.element(h=1)

    def xi(self) -> CohClass:
        return self.element(xi=1)

    def divisor(self, g: int) -> CohClass:
        return self.element(base=self.base.divisors[g])

    def _poly_of(self, a: CohClass) -> Poly:
        return {self.keys[n]: c for n, c in enumerate(a.v) if c}

    def basis_product(self, i: int, j: int) -> Tuple[Tuple[int, Fraction], ...]:
        key = (i, j) if i <= j else (j, i)
        got = self._mulcache.get(key)
        if got is None:
            ki, kj = self.keys[i], self.keys[j]
            v = self.reduce(self._pmul({ki: Fraction(1)}, {kj: Fraction(1)}))
            got = tuple((n, c) for n, c in enumerate(v) if c)
            self._mulcache[key] = got
        return got

    def mul(self, a: CohClass, b: CohClass) -> CohClass:
        out = [Fraction(0)] * self.rank
        for i, c in enumerate(a.v):
            if not c:
                continue
            for j, d in enumerate(b.v):
                if not d:
                    continue
                for n, e in self.basis_product(i, j):
                    out[n] += c * d * e
        return CohClass(self, out)

    def mul_matrix(self, a: CohClass) -> List[List[Fraction]]:
        """Matrix M with (a*x)[k] = sum_j M[k][j] x[j]."""
        n = self.rank
        M = [[Fraction(0)] * n for _ in range(n)]
        for j in range(n):
            col = self.mul(a, self.basis(j)).v
            for k in range(n):
                M[k][j] = col[k]
        return M

    def integral(self, a: CohClass) -> Fraction:
        top_l = self.r
        top_m = self.mmax
        s = Fraction(0)
        for n, c in enumerate(a.v):
            if c:
                i, l, m = self.keys[n]
                if l == top_l and m == top_m:
                    s += c * self.base.integral[i]
        return s

    def pairing(self, a: CohClass, b: CohClass) -> Fraction:
        return self.integral(self.mul(a, b))

    def pairing_matrix(self) -> List[List[Fraction]]:
        n = self.rank
        return [[self.pairing(self.basis(i), self.basis(j)) for j in range(n)] for i in range(n)]

    def dual_basis(self) -> List[CohClass]:
        """T^k with (T_j, T^k) = delta_jk."""
        from .linalg import mat_inverse

        G = self.pairing_matrix()
        Ginv = mat_inverse(G)
        n = self.rank
        return [CohClass(self, [Ginv[j][k] for j in range(n)]) for k in range(n)]

    def format_vector(self, v: Sequence[Fraction]) -> str:
        parts = []
        for n, c in enumerate(v):
            if c:
                parts.append(f"{c}*{self.basis_name(n)}")
        return " + ".join(parts) if parts else "0"

    def flopped(self) -> "TotalAlgebra":
        if self.kind != "flop":
            raise ValueError("flop partner only defined for double bundles")
        return TotalAlgebra(self.base, self.r, self.mu_p, self.mu, "flop")

    def flop_map(self, a: CohClass, target: "TotalAlgebra | None" = None) -> CohClass:
        """h -> xi' - h', xi -> xi', base fixed; linear, expressed in H(X')."""
        if target is None:
            target = self.flopped()
        out = [Fraction(0)] * target.rank
        for n, c in enumerate(a.v):
            if not c:
                continue
            i, l, m = self.keys[n]
            p: Poly = {(i, 0, 0): Fraction(1)}
            lin = {(0, 0, 1): Fraction(1), (0, 1, 0): Fraction(-1)}
            for _ in range(l):
                p = target._pmul(p, lin)
            for _ in range(m):
                p = target._pmul(p, {(0, 0, 1): Fraction(1)})
            v = target.reduce(p)
            for k in range(target.rank):
                out[k] += c * v[k]
        return CohClass(target, out)

    def check_associativity(self) -> bool:
        n = self.rank
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    a, b, c = self.basis(i), self.basis(j), self.basis(k)
                    if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)):
                        return False
        return True
