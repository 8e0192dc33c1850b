"""Exact feasibility LP over the rationals (phase-one simplex, Bland's rule)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

__all__ = ["find_feasible"]


def find_feasible(
    A: Sequence[Sequence], b: Sequence, free: Sequence[int] = ()
) -> list[Fraction] | None:
    """A point of ``{x : A x = b, x_j >= 0 for j not in free}`` or None.

    Free variables are split as ``x = x+ - x-``.  All arithmetic is exact.
    """
    m = len(A)
    nvar = len(A[0]) if m else 0
    free = sorted(set(free))
    # columns: original vars, then negative parts of the free ones
    rows = []
    rhs = []
    for i in range(m):
        row = [Fraction(a) for a in A[i]] + [-Fraction(A[i][j]) for j in free]
        r = Fraction(b[i])
        if r < 0:
            row = [-a for a in row]
            r = -r
        rows.append(row)
        rhs.append(r)
    ncols = nvar + len(free)
    # artificial variable per row; tableau rows are [coeffs..., artificials..., rhs]
    T = [rows[i] + [Fraction(int(i == j)) for j in range(m)] + [rhs[i]] for i in range(m)]
    basis = [ncols + i for i in range(m)]
    width = ncols + m
    # reduced costs for minimizing the sum of artificials
    cost = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(ncols):
            cost[j] -= T[i][j]
        cost[width] -= T[i][width]

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][width] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:  # unbounded phase one cannot happen; guard anyway
            return None
        _pivot(T, cost, leave, enter)
        basis[leave] = enter

    if cost[width] != 0:
        return None
    x = [Fraction(0)] * ncols
    for i, j in enumerate(basis):
        if j < ncols:
            x[j] = T[i][width]
    for k, j in enumerate(free):
        x[j] -= x[nvar + k]
    return x[:nvar]


def _pivot(T, cost, r, c):
    piv = T[r][c]
    row = [a / piv for a in T[r]]
    T[r] = row
    for i in range(len(T)):
        if i != r:
            f = T[i][c]
            if f:
                Ti = T[i]
                for j, a in enumerate(row):
                    if a:
                        Ti[j] -= f * a
    f = cost[c]
    if f:
        for j, a in enumerate(row):
            if a:
                cost[j] -= f * a
