"""Small exact linear algebra over the rationals, with float counterparts.

Exact routines clear denominators and run fraction-free (Bareiss)
elimination on Python integers, so results carry no rounding at all.
Float routines delegate to numpy.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

FLOAT_RTOL = 1e-9


def _is_exact(rows) -> bool:
    return all(not isinstance(x, float) for row in rows for x in row)


def _common_denominator(values) -> int:
    d = 1
    for x in values:
        if isinstance(x, Fraction):
            d = lcm(d, x.denominator)
    return d


def bareiss_det(m: list[list[int]]) -> int:
    """Determinant of an integer matrix by fraction-free elimination."""
    n = len(m)
    if n == 0:
        return 1
    a = [list(row) for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            rowi = a[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (rowi[j] * akk - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def det(m: Sequence[Sequence]) -> Fraction | float:
    """Determinant; exact for Fraction/int entries, LAPACK LU for floats."""
    rows = [list(r) for r in m]
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if not _is_exact(rows):
        return float(np.linalg.det(np.array(rows, dtype=float)))
    d = _common_denominator(x for row in rows for x in row)
    ints = [[int(x * d) for x in row] for row in rows]
    return Fraction(bareiss_det(ints), d ** n)


def rank_exact(m: Sequence[Sequence]) -> tuple[int, list[int]]:
    """Exact rank and the indices of a maximal independent set of rows."""
    rows = []
    for row in m:
        d = _common_denominator(row)
        rows.append([int(Fraction(x) * d) for x in row])
    if not rows:
        return 0, []
    ncols = len(rows[0])
    # Work on the transpose so pivot columns name independent input rows.
    a = [[rows[i][j] for i in range(len(rows))] for j in range(ncols)]
    nr, nc = len(a), len(rows)
    pivots = []
    r = 0
    prev = 1
    for c in range(nc):
        p = next((i for i in range(r, nr) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        arc = a[r][c]
        for i in range(r + 1, nr):
            aic = a[i][c]
            ai = a[i]
            ar = a[r]
            for j in range(c + 1, nc):
                ai[j] = (ai[j] * arc - aic * ar[j]) // prev
            ai[c] = 0
        prev = arc
        pivots.append(c)
        r += 1
        if r == nr:
            break
    return r, pivots


def singular_values(m: Sequence[Sequence]) -> np.ndarray:
    arr = np.array([[float(x) for x in row] for row in m], dtype=float)
    if arr.size == 0:
        return np.zeros(0)
    return np.linalg.svd(arr, compute_uv=False)


def rank_float(m: Sequence[Sequence], rtol: float = FLOAT_RTOL) -> tuple[int, np.ndarray]:
    """Numerical rank: singular values above ``rtol * s_max``."""
    s = singular_values(m)
    if s.size == 0 or s[0] == 0:
        return 0, s
    return int(np.sum(s > rtol * s[0])), s


def solve(a: Sequence[Sequence], b: Sequence) -> list:
    """Solve a square system exactly (Fractions) or with LAPACK (floats)."""
    rows = [list(r) for r in a]
    if not _is_exact(rows) or any(isinstance(x, float) for x in b):
        return [float(x) for x in np.linalg.solve(np.array(rows, dtype=float), np.array(b, dtype=float))]
    n = len(rows)
    aug = [[Fraction(x) for x in rows[i]] + [Fraction(b[i])] for i in range(n)]
    for c in range(n):
        p = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if p is None:
            raise np.linalg.LinAlgError("singular matrix")
        aug[c], aug[p] = aug[p], aug[c]
        piv = aug[c][c]
        rowc = [x / piv for x in aug[c]]
        aug[c] = rowc
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], rowc)]
    return [aug[i][n] for i in range(n)]


def matvec(m, v):
    return [sum(x * y for x, y in zip(row, v)) for row in m]


def dot(u, v):
    return sum(x * y for x, y in zip(u, v))


def transpose(m):
    return [list(col) for col in zip(*m)]
