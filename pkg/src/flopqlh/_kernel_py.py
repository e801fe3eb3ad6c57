"""Pure-Python kernels for multiplying and dividing by linear factors D + m z."""

from __future__ import annotations

from fractions import Fraction


def _apply(rows, v):
    out = []
    for row in rows:
        s = 0
        for j, c in row:
            x = v[j]
            if x:
                s += c * x
        out.append(Fraction(s))
    return out


def mul_linear(rows, m, f):
    """(D + m z) f, with D given by sparse rows [(col, coeff), ...]."""
    from .ifunc import HLaurent

    out = {}
    for k, v in f.terms.items():
        dv = _apply(rows, v)
        acc = out.get(k)
        out[k] = dv if acc is None else [a + b for a, b in zip(acc, dv)]
        if m:
            acc = out.get(k + 1)
            mv = [m * x for x in v]
            out[k + 1] = mv if acc is None else [a + b for a, b in zip(acc, mv)]
    return HLaurent(f.n, out)


def div_linear(rows, m, f, dim):
    """f / (D + m z) using D^(dim+1) = 0."""
    from .ifunc import HLaurent

    out = {}
    inv = 1 / Fraction(m)
    for k, v in f.terms.items():
        w = list(v)
        coef = inv
        for j in range(dim + 1):
            if not any(w):
                break
            key = k - j - 1
            add = [coef * x for x in w]
            acc = out.get(key)
            out[key] = add if acc is None else [a + b for a, b in zip(acc, add)]
            w = _apply(rows, w)
            coef = -coef * inv
    return HLaurent(f.n, out)
