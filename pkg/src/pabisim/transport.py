"""Kantorovich lifting of a state pseudometric via the transportation problem.

The solver is the transportation (network) simplex on the bipartite support
graph: north-west-corner start, potentials from the spanning-tree basis,
entering cell chosen by Bland's rule.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Distribution

_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class GroundMetric:
    """Symmetric ``[0, 1]``-valued table with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("ground metric must be a square table")
        if not np.allclose(e, e.T, atol=_EPS, rtol=0):
            raise ValueError("ground metric is not symmetric")
        if np.any(np.abs(np.diag(e)) > _EPS):
            raise ValueError("ground metric has a nonzero diagonal")
        if e.size and (e.min() < -_EPS or e.max() > 1 + _EPS):
            raise ValueError("ground metric entries must lie in [0, 1]")
        object.__setattr__(self, "entries", e)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def discrete(cls, n: int) -> GroundMetric:
        return cls(1.0 - np.eye(n))

    @classmethod
    def zero(cls, n: int) -> GroundMetric:
        return cls(np.zeros((n, n)))


@dataclass(frozen=True)
class WeightFunction:
    """A coupling of two distributions, stored sparsely as ``{(s, t): mass}``."""

    entries: dict[tuple[int, int], float]
    row_potentials: dict[int, float] = field(default_factory=dict)
    col_potentials: dict[int, float] = field(default_factory=dict)

    def cost(self, d: GroundMetric) -> float:
        return sum(w * d.entries[s, t] for (s, t), w in self.entries.items())

    def dual_value(self, mu: Distribution, nu: Distribution) -> float:
        return sum(float(w) * self.row_potentials.get(s, 0.0) for s, w in mu.items()) + sum(
            float(w) * self.col_potentials.get(t, 0.0) for t, w in nu.items()
        )


def check_weight_function(lam: WeightFunction, mu: Distribution, nu: Distribution, atol: float = 1e-12) -> bool:
    """Do the row marginals equal ``mu`` and the column marginals ``nu``?"""
    rows: dict[int, float] = {}
    cols: dict[int, float] = {}
    for (s, t), w in lam.entries.items():
        if w < -atol:
            return False
        rows[s] = rows.get(s, 0.0) + w
        cols[t] = cols.get(t, 0.0) + w
    for marg, dist in ((rows, mu), (cols, nu)):
        keys = set(marg) | set(dist.support)
        if any(abs(marg.get(k, 0.0) - float(dist[k])) > atol for k in keys):
            return False
    return True


def transport(cost: np.ndarray, supply: Sequence[float], demand: Sequence[float], max_iter: int = 10_000):
    """Minimum-cost transportation plan.

    Returns ``(value, flow, u, v)`` where ``u``/``v`` are optimal dual
    potentials (``u[i] + v[j] <= cost[i, j]``, tight on the basis).
    """
    m, n = len(supply), len(demand)
    cost = np.asarray(cost, dtype=float)
    a = list(map(float, supply))
    b = list(map(float, demand))
    flow = np.zeros((m, n))
    basis: set[tuple[int, int]] = set()
    i = j = 0
    while True:
        q = min(a[i], b[j])
        flow[i, j] = q
        basis.add((i, j))
        a[i] -= q
        b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1 or a[i] <= b[j]:
            i += 1
        else:
            j += 1
    # absorb floating residue of unequal totals into the last cell
    flow[m - 1, n - 1] += max(0.0, a[m - 1]) if m and n else 0.0

    for _ in range(max_iter):
        u, v = _potentials(cost, basis, m, n)
        enter = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in basis and cost[i, j] - u[i] - v[j] < -_EPS:
                    enter = (i, j)
                    break
            if enter:
                break
        if enter is None:
            return float((flow * cost).sum()), flow, u, v
        path = _tree_path(basis, enter[0], enter[1])
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leave = min(c for c in minus if flow[c] <= theta)
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[enter] += theta
        flow[leave] = 0.0
        basis.discard(leave)
        basis.add(enter)
    raise RuntimeError("transportation simplex did not terminate")


def _potentials(cost, basis, m, n):
    u = [None] * m
    v = [None] * n
    u[0] = 0.0
    by_row: dict[int, list[int]] = {}
    by_col: dict[int, list[int]] = {}
    for i, j in basis:
        by_row.setdefault(i, []).append(j)
        by_col.setdefault(j, []).append(i)
    queue = deque([("r", 0)])
    while queue:
        kind, k = queue.popleft()
        if kind == "r":
            for j in by_row.get(k, ()):
                if v[j] is None:
                    v[j] = cost[k, j] - u[k]
                    queue.append(("c", j))
        else:
            for i in by_col.get(k, ()):
                if u[i] is None:
                    u[i] = cost[i, k] - v[k]
                    queue.append(("r", i))
    return [x if x is not None else 0.0 for x in u], [x if x is not None else 0.0 for x in v]


def _tree_path(basis, i0: int, j0: int) -> list[tuple[int, int]]:
    """Basis cells on the tree path from row ``i0`` to column ``j0``."""
    adj: dict[tuple[str, int], list[tuple[tuple[str, int], tuple[int, int]]]] = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    start, goal = ("r", i0), ("c", j0)
    prev: dict = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt, cell in adj.get(node, ()):
            if nxt not in prev:
                prev[nxt] = (node, cell)
                queue.append(nxt)
    cells = []
    node = goal
    while prev[node] is not None:
        node, cell = prev[node]
        cells.append(cell)
    cells.reverse()
    return cells


def lift_metric(d: GroundMetric | np.ndarray, mu: Distribution, nu: Distribution) -> tuple[float, WeightFunction]:
    """Optimal transport cost of ``mu`` to ``nu`` under ground metric ``d``."""
    entries = d.entries if isinstance(d, GroundMetric) else np.asarray(d, dtype=float)
    for dist in (mu, nu):
        if not dist.is_valid():
            raise ValueError(f"marginal is not a distribution: {dist!r}")
        if dist.support and dist.support[-1] >= entries.shape[0]:
            raise ValueError("marginal lives outside the ground metric's state space")
    rows, cols = mu.support, nu.support
    cost = entries[np.ix_(rows, cols)]
    value, flow, u, v = transport(cost, [float(w) for _, w in mu.items()], [float(w) for _, w in nu.items()])
    plan = {
        (rows[i], cols[j]): float(flow[i, j])
        for i in range(len(rows))
        for j in range(len(cols))
        if flow[i, j] > 0
    }
    lam = WeightFunction(
        plan,
        {rows[i]: u[i] for i in range(len(rows))},
        {cols[j]: v[j] for j in range(len(cols))},
    )
    return value, lam
