"""Exact rational linear algebra used by the reference (exact) code paths.

Everything here operates on lists of ``fractions.Fraction`` and never
touches floating point.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Sequence


def is_exact(*values) -> bool:
    """True if every scalar in the (possibly nested) input is an int or Fraction."""
    stack = list(values)
    while stack:
        v = stack.pop()
        if isinstance(v, bool):
            return False
        if isinstance(v, Rational):
            continue
        if isinstance(v, (list, tuple)):
            stack.extend(v)
            continue
        if hasattr(v, "dtype") and getattr(v, "dtype", None) == object:
            stack.extend(v.tolist())
            continue
        return False
    return True


def to_fraction_vector(v: Sequence) -> list[Fraction]:
    return [Fraction(x) for x in v]


def rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form. Returns (matrix, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    n_rows, n_cols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    if not vectors:
        return 0
    return len(rref([to_fraction_vector(v) for v in vectors])[1])


def solve_unique(columns: list[list[Fraction]], rhs: list[Fraction]):
    """Solve ``sum_j x_j columns[j] = rhs``.

    Returns ``(status, x)`` where status is ``"none"`` (inconsistent),
    ``"unique"`` or ``"many"`` (free variables remain; ``x`` is None).
    """
    n = len(rhs)
    k = len(columns)
    aug = [[columns[j][i] for j in range(k)] + [rhs[i]] for i in range(n)]
    m, pivots = rref(aug)
    if k in pivots:
        return "none", None
    if len(pivots) < k:
        return "many", None
    x = [Fraction(0)] * k
    for row, c in enumerate(pivots):
        x[c] = m[row][k]
    return "unique", x


def feasible_nonneg(a: list[list[Fraction]], b: list[Fraction]) -> bool:
    """Decide whether ``A y = b, y >= 0`` has a solution (exact phase-I simplex).

    ``a`` is given row-major (len(b) rows). Bland's rule guarantees termination.
    """
    n_rows = len(b)
    if n_rows == 0:
        return True
    n_vars = len(a[0]) if a else 0
    rows = []
    for i in range(n_rows):
        r = list(a[i])
        bi = b[i]
        if bi < 0:
            r = [-x for x in r]
            bi = -bi
        rows.append(r + [Fraction(1 if j == i else 0) for j in range(n_rows)] + [bi])
    width = n_vars + n_rows
    basis = [n_vars + i for i in range(n_rows)]
    # phase-I objective: minimise the sum of artificials, stored as reduced costs
    cost = [Fraction(0)] * (width + 1)
    for r in rows:
        for j in range(n_vars):
            cost[j] -= r[j]
        cost[width] -= r[width]
    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i, r in enumerate(rows):
            if r[enter] > 0:
                ratio = r[width] / r[enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            # unbounded phase-I direction cannot happen (objective bounded below by 0)
            break
        i = best[1]
        piv = rows[i][enter]
        rows[i] = [x / piv for x in rows[i]]
        for k, r in enumerate(rows):
            if k != i and r[enter] != 0:
                f = r[enter]
                rows[k] = [x - f * y for x, y in zip(r, rows[i])]
        f = cost[enter]
        cost = [x - f * y for x, y in zip(cost, rows[i])]
        basis[i] = enter
    return cost[width] == 0
