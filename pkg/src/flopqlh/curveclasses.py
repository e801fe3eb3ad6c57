"""Curve classes beta = beta_S + d*l + d2*gamma and their lifts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

from .cohring import TotalAlgebra


@dataclass(frozen=True, order=True)
class CurveClass:
    beta_s: Tuple[int, ...]
    d: int = 0
    d2: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta_s", tuple(int(x) for x in self.beta_s))

    def __add__(self, other: "CurveClass") -> "CurveClass":
        return CurveClass(tuple(a + b for a, b in zip(self.beta_s, other.beta_s)), self.d + other.d, self.d2 + other.d2)

    def __sub__(self, other: "CurveClass") -> "CurveClass":
        return CurveClass(tuple(a - b for a, b in zip(self.beta_s, other.beta_s)), self.d - other.d, self.d2 - other.d2)

    def __neg__(self) -> "CurveClass":
        return CurveClass(tuple(-a for a in self.beta_s), -self.d, -self.d2)

    def is_zero(self) -> bool:
        return self.d == 0 and self.d2 == 0 and not any(self.beta_s)

    def to_tuple(self) -> Tuple[Tuple[int, ...], int, int]:
        return (self.beta_s, self.d, self.d2)

    def key(self) -> str:
        return f"{','.join(map(str, self.beta_s))};{self.d};{self.d2}"

    @classmethod
    def from_key(cls, s: str) -> "CurveClass":
        bs, d, d2 = s.split(";")
        return cls(tuple(int(x) for x in bs.split(",") if x != ""), int(d), int(d2))

    def __str__(self) -> str:
        return f"({list(self.beta_s)}, d={self.d}, d2={self.d2})"


def zero_class(X: TotalAlgebra) -> CurveClass:
    return CurveClass((0,) * X.base.ngen, 0, 0)


def mus(X: TotalAlgebra, beta_s: Sequence[int]) -> List[int]:
    return [sum(m * b for m, b in zip(row, beta_s)) for row in X.mu]


def mus_p(X: TotalAlgebra, beta_s: Sequence[int]) -> List[int]:
    if X.kind != "flop":
        return []
    return [sum(m * b for m, b in zip(row, beta_s)) for row in X.mu_p]


def mu_I(X: TotalAlgebra, beta_s: Sequence[int]) -> int:
    return max(mus(X, beta_s))


def mu_p_I(X: TotalAlgebra, beta_s: Sequence[int]) -> int:
    return max(mus_p(X, beta_s)) if X.kind == "flop" else 0


def nu_I(X: TotalAlgebra, beta_s: Sequence[int]) -> int:
    if X.kind != "flop":
        return 0
    return max(mu_I(X, beta_s) + mu_p_I(X, beta_s), 0)


def i_minimal_lift(X: TotalAlgebra, beta_s: Sequence[int]) -> CurveClass:
    return CurveClass(tuple(beta_s), -mu_I(X, beta_s), -nu_I(X, beta_s))


def is_I_effective(X: TotalAlgebra, beta: CurveClass) -> bool:
    if any(b < 0 for b in beta.beta_s):
        return False
    if X.kind != "flop" and beta.d2 != 0:
        return False
    return beta.d >= -mu_I(X, beta.beta_s) and beta.d2 >= -nu_I(X, beta.beta_s)


def is_TI_effective(X: TotalAlgebra, beta: CurveClass) -> bool:
    if any(b < 0 for b in beta.beta_s):
        return False
    return beta.d + mu_I(X, beta.beta_s) >= 0 and beta.d2 - beta.d + mu_p_I(X, beta.beta_s) >= 0


def flop_push(beta: CurveClass) -> CurveClass:
    return CurveClass(beta.beta_s, beta.d2 - beta.d, beta.d2)


def a_dot(X: TotalAlgebra, beta: CurveClass) -> List[int]:
    """a_i . beta = d + mu_i."""
    return [beta.d + m for m in mus(X, beta.beta_s)]


def b_dot(X: TotalAlgebra, beta: CurveClass) -> List[int]:
    """b_i . beta = d2 - d + mu'_i."""
    return [beta.d2 - beta.d + m for m in mus_p(X, beta.beta_s)]


@dataclass(frozen=True)
class LengthData:
    n: Tuple[int, ...]
    n_p: Tuple[int, ...]
    n_xi: int

    def all_nonnegative(self) -> bool:
        return min(self.n + self.n_p + (self.n_xi,)) >= 0

    @property
    def total(self) -> int:
        return sum(self.n) + sum(self.n_p) + self.n_xi


def lengths(X: TotalAlgebra, beta: CurveClass) -> LengthData:
    n = tuple(-x for x in a_dot(X, beta))
    if X.kind == "flop":
        return LengthData(n, tuple(-x for x in b_dot(X, beta)), -beta.d2)
    return LengthData(n, (), 0)


def admissible(X: TotalAlgebra, beta: CurveClass) -> bool:
    return lengths(X, beta).all_nonnegative()


def twisted_lift(X: TotalAlgebra, beta_s: Sequence[int]) -> CurveClass:
    """I-minimal lift shifted by -delta*l when mu + mu' < 0."""
    lift = i_minimal_lift(X, beta_s)
    s = mu_I(X, beta_s) + mu_p_I(X, beta_s)
    if X.kind == "flop" and s < 0:
        return CurveClass(lift.beta_s, lift.d + s, lift.d2)
    return lift


def geometric_minimal_lift(X: TotalAlgebra, decomposition: Sequence[Tuple[int, Sequence[int]]]) -> CurveClass:
    """Lift of sum n_j C_j using per-component maxima.

    ``decomposition`` is a list of ``(n_j, C_j)`` with ``n_j >= 1`` and
    ``C_j`` an effective base class.
    """
    if not decomposition:
        raise ValueError("empty decomposition")
    ngen = X.base.ngen
    total = [0] * ngen
    mu = 0
    nu = 0
    for n, comp in decomposition:
        if n < 1 or any(c < 0 for c in comp) or not any(comp):
            raise ValueError("decomposition components must be non-zero effective classes with positive multiplicity")
        for g in range(ngen):
            total[g] += n * comp[g]
        mc = mu_I(X, comp)
        mpc = mu_p_I(X, comp)
        mu += n * mc
        if X.kind == "flop":
            nu += n * max(mc + mpc, 0)
    return CurveClass(tuple(total), -mu, -nu)


def lam(X: TotalAlgebra, beta: CurveClass) -> int:
    """c1(X/S).beta."""
    if X.kind == "flop":
        return sum(mus(X, beta.beta_s)) + sum(mus_p(X, beta.beta_s)) + (X.r + 2) * beta.d2
    return sum(a_dot(X, beta))


def c1_X(X: TotalAlgebra, beta: CurveClass) -> int:
    return lam(X, beta) + X.base.c1_degree(beta.beta_s)


def divisor_dot(X: TotalAlgebra, coeffs: Sequence[int], beta: CurveClass) -> int:
    """(c_h h + c_xi xi + sum_g c_g D_g) . beta for coeffs = (c_h, c_xi, c_g...)."""
    ch, cx, *cg = coeffs
    return ch * beta.d + cx * beta.d2 + sum(c * b for c, b in zip(cg, beta.beta_s))


def weight(beta: CurveClass) -> Tuple[Tuple[int, ...], int]:
    return (beta.beta_s, beta.d2)


def grading_coefficient(X: TotalAlgebra) -> int:
    """c such that c*|beta_S| + d2 > 0 on non-zero I-effective weights."""
    ngen = X.base.ngen
    worst = 0
    for g in range(ngen):
        e = [0] * ngen
        e[g] = 1
        worst = max(worst, nu_I(X, e))
    return worst + 1


def weight_grade(X: TotalAlgebra, w: Tuple[Tuple[int, ...], int]) -> int:
    return grading_coefficient(X) * sum(w[0]) + w[1]


def class_grade(X: TotalAlgebra, beta: CurveClass) -> Tuple[int, int]:
    """Order key: weight grade first, then the fibre degree shifted to be >= 0."""
    return (weight_grade(X, weight(beta)), beta.d + mu_I(X, beta.beta_s))


def enumerate_weights(X: TotalAlgebra, max_bs: int, max_d2: int) -> List[Tuple[Tuple[int, ...], int]]:
    """I-effective weights (beta_S, d2) with |beta_S| <= max_bs, d2 <= max_d2."""
    from itertools import product

    ngen = X.base.ngen
    out = []
    for bs in product(range(max_bs + 1), repeat=ngen):
        if sum(bs) > max_bs:
            continue
        lo = -nu_I(X, bs) if X.kind == "flop" else 0
        hi = max_d2 if X.kind == "flop" else 0
        for d2 in range(lo, hi + 1):
            out.append((tuple(bs), d2))
    out.sort(key=lambda w: (weight_grade(X, w), w))
    return out


def box_classes(X: TotalAlgebra, max_bs: int, max_d2: int, max_d: int) -> List[CurveClass]:
    """I-effective classes in the truncation box."""
    out = []
    for bs, d2 in enumerate_weights(X, max_bs, max_d2):
        for d in range(-mu_I(X, bs), max_d + 1):
            out.append(CurveClass(bs, d, d2))
    return out


def down_closure(X: TotalAlgebra, targets: Sequence[CurveClass]) -> List[CurveClass]:
    """All I-effective beta' with beta - beta' I-effective for some target."""
    from itertools import product

    seen = set()
    for t in targets:
        ngen = len(t.beta_s)
        for bs in product(*[range(b + 1) for b in t.beta_s]):
            rest = tuple(b - c for b, c in zip(t.beta_s, bs))
            dlo = -mu_I(X, bs)
            dhi = t.d + mu_I(X, rest)
            if X.kind == "flop":
                elo = -nu_I(X, bs)
                ehi = t.d2 + nu_I(X, rest)
            else:
                elo = ehi = 0
            for d in range(dlo, dhi + 1):
                for d2 in range(elo, ehi + 1):
                    seen.add(CurveClass(bs, d, d2))
    return sorted(seen, key=lambda b: (class_grade(X, b), b))


def iter_lattice(ngen: int, rng: range, d_rng: range, d2_rng: range) -> Iterator[CurveClass]:
    from itertools import product

    for bs in product(rng, repeat=ngen):
        for d in d_rng:
            for d2 in d2_rng:
                yield CurveClass(bs, d, d2)
