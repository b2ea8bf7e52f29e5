"""Exact rational feasibility for ``A x = b, x >= 0``.

Phase-one simplex on a dense tableau of Fractions with Bland's rule, so it
terminates on degenerate problems and never rounds.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def feasible_point(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction] | None:
    """A nonnegative solution of ``A x = b``, or None when none exists."""
    m = len(A)
    n = len(A[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    # tableau rows: [x_0..x_{n-1}, art_0..art_{m-1} | rhs]
    T: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        T.append(row + art + [rhs])
    width = n + m
    basis = [n + i for i in range(m)]
    # reduced costs of "minimise sum of artificials"
    z = [-sum((T[i][j] for i in range(m)), Fraction(0)) for j in range(n)] + [Fraction(0)] * m
    z.append(-sum((T[i][width] for i in range(m)), Fraction(0)))

    while True:
        enter = next((j for j in range(n) if z[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                r = T[i][width] / a
                if best is None or r < best or (r == best and basis[i] < basis[leave]):
                    best, leave = r, i
        if leave is None:  # cannot happen: phase one is bounded below
            break
        _pivot(T, z, leave, enter)
        basis[leave] = enter

    if z[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][width]
    return x


def _pivot(T: list[list[Fraction]], z: list[Fraction], r: int, c: int) -> None:
    piv = T[r][c]
    row = T[r]
    if piv != 1:
        row[:] = [v / piv for v in row]
    nz = [(j, v) for j, v in enumerate(row) if v != 0]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f != 0:
                for j, v in nz:
                    other[j] -= f * v
    f = z[c]
    if f != 0:
        for j, v in nz:
            z[j] -= f * v


def convex_weights(points: Sequence[dict[int, Fraction]], target: dict[int, Fraction]) -> list[Fraction] | None:
    """Weights ``p >= 0, sum p = 1`` with ``sum_i p_i * points[i] == target``."""
    coords = sorted(set(target).union(*(set(p) for p in points)))
    A = [[p.get(c, Fraction(0)) for p in points] for c in coords]
    b = [target.get(c, Fraction(0)) for c in coords]
    A.append([Fraction(1)] * len(points))
    b.append(Fraction(1))
    return feasible_point(A, b)
