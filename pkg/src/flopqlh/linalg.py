"""Small dense exact linear algebra over any field-like scalars."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence


def identity(n: int, one=Fraction(1), zero=Fraction(0)) -> List[list]:
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_inverse(M: Sequence[Sequence]) -> List[list]:
    n = len(M)
    A = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def mat_mul(A: Sequence[Sequence], B: Sequence[Sequence]) -> List[list]:
    n, m, p = len(A), len(B), len(B[0]) if B else 0
    return [[sum((A[i][k] * B[k][j] for k in range(m)), Fraction(0)) for j in range(p)] for i in range(n)]
