"""State-based probabilistic bisimulation and the state-based game metric."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy.optimize import linprog

from .exact_lp import convex_weights
from .model import Automaton, Distribution
from .transport import transport


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    @property
    def block_of(self) -> tuple[int, ...]:
        n = sum(len(b) for b in self.blocks)
        out = [0] * n
        for k, b in enumerate(self.blocks):
            for s in b:
                out[s] = k
        return tuple(out)

    def same_block(self, s: int, t: int) -> bool:
        bo = self.block_of
        return bo[s] == bo[t]

    def named(self, a: Automaton) -> list[list[str]]:
        return [[a.states[s] for s in b] for b in self.blocks]


def _block_vector(mu: Distribution, block_of: tuple[int, ...]) -> tuple[Fraction, ...]:
    out = [Fraction(0)] * (max(block_of) + 1)
    for s, w in mu.items():
        out[block_of[s]] += w
    return tuple(out)


def _hull_contains(points: list[tuple[Fraction, ...]], target: tuple[Fraction, ...]) -> bool:
    if target in points:
        return True
    as_dicts = [dict(enumerate(p)) for p in points]
    return convex_weights(as_dicts, dict(enumerate(target))) is not None


def _signature(a: Automaton, s: int, block_of) -> list[list[tuple[Fraction, ...]]]:
    out = []
    for act in range(len(a.actions)):
        vecs = []
        for mu in a.successors(s, act):
            v = _block_vector(mu, block_of)
            if v not in vecs:
                vecs.append(v)
        out.append(vecs)
    return out


def _compatible(sig_s, sig_r) -> bool:
    """Mutual matching by combined transitions, i.e. equal convex hulls."""
    for vs, vr in zip(sig_s, sig_r):
        if bool(vs) != bool(vr):
            return False
        if not all(_hull_contains(vr, v) for v in vs):
            return False
        if not all(_hull_contains(vs, v) for v in vr):
            return False
    return True


def prob_bisim_partition(a: Automaton) -> Partition:
    """Coarsest probabilistic bisimulation (with combined transitions) of ``a``."""
    groups: dict[frozenset[int], list[int]] = {}
    for s in range(a.n):
        groups.setdefault(a.labels[s], []).append(s)
    blocks = [tuple(b) for b in groups.values()]
    while True:
        block_of = Partition(tuple(blocks)).block_of
        sigs = [_signature(a, s, block_of) for s in range(a.n)]
        refined: list[tuple[int, ...]] = []
        for b in blocks:
            parts: list[list[int]] = []
            for s in b:
                for part in parts:
                    if _compatible(sigs[s], sigs[part[0]]):
                        part.append(s)
                        break
                else:
                    parts.append([s])
            refined.extend(tuple(p) for p in parts)
        refined.sort(key=min)
        if len(refined) == len(blocks):
            return Partition(tuple(refined))
        blocks = refined


def lift_partition_check(p: Partition, mu: Distribution, nu: Distribution) -> bool:
    """``mu R nu``: equal mass on every block."""
    bo = p.block_of
    return _block_vector(mu, bo) == _block_vector(nu, bo)


@dataclass(frozen=True, eq=False)
class StateMetricTable:
    gamma: float
    entries: np.ndarray
    iterations: int
    converged: bool
    # sup-norm bound on (least fixed point - entries); inf when uncertified
    error_bound: float

    def __getitem__(self, st: tuple[int, int]) -> float:
        return float(self.entries[st])


def _workers() -> int:
    env = os.environ.get("PABISIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _inner_inf(mu: Distribution, options: tuple[Distribution, ...], d: np.ndarray) -> float:
    """``min`` over combined ``nu`` in conv(options) of the lifted ``d(mu, nu)``."""
    rows = mu.support
    supply = [float(w) for _, w in mu.items()]
    if len(options) == 1:
        nu = options[0]
        cols = nu.support
        if len(rows) == 1 or len(cols) == 1:
            return float(sum(
                float(wm) * float(wn) * d[s, t] for s, wm in mu.items() for t, wn in nu.items()
            ))
        val, *_ = transport(d[np.ix_(rows, cols)], supply, [float(w) for _, w in nu.items()])
        return val
    cols = sorted(set().union(*(nu.support for nu in options)))
    J, R, C = len(options), len(rows), len(cols)
    nvar = J + R * C
    c = np.zeros(nvar)
    c[J:] = d[np.ix_(rows, cols)].ravel()
    A = np.zeros((R + C + 1, nvar))
    b = np.zeros(R + C + 1)
    for i in range(R):
        A[i, J + i * C: J + (i + 1) * C] = 1.0
        b[i] = supply[i]
    for k, v in enumerate(cols):
        A[R + k, J + k: nvar: C] = 1.0
        for j, nu in enumerate(options):
            A[R + k, j] = -float(nu[v])
    A[R + C, :J] = 1.0
    b[R + C] = 1.0
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"coupling LP failed: {res.message}")
    return float(res.fun)


def _directed(a: Automaton, s: int, t: int, act: int, gamma: float, d: np.ndarray) -> float:
    succ_s = a.successors(s, act)
    if not succ_s:
        return 0.0  # sup over nothing
    succ_t = a.successors(t, act)
    if not succ_t:
        return 1.0  # inf over nothing
    return max(gamma * _inner_inf(mu, succ_t, d) for mu in succ_s)


def _apply_f(a: Automaton, gamma: float, d: np.ndarray, pool) -> np.ndarray:
    n = a.n
    pairs = [(s, t) for s in range(n) for t in range(s + 1, n)]

    def one(st):
        s, t = st
        if a.labels[s] != a.labels[t]:
            return 1.0
        best = 0.0
        for act in range(len(a.actions)):
            best = max(best, _directed(a, s, t, act, gamma, d), _directed(a, t, s, act, gamma, d))
            if best >= 1.0:
                break
        return best

    values = list(pool.map(one, pairs)) if pool is not None else [one(st) for st in pairs]
    new = np.zeros((n, n))
    for (s, t), v in zip(pairs, values):
        new[s, t] = new[t, s] = min(1.0, v)
    return new


def state_metric_iterates(a: Automaton, gamma: float) -> Iterator[np.ndarray]:
    """``d_0 = 0, d_{n+1} = f(d_n)``; yields ``d_1, d_2, ...`` forever."""
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    workers = _workers()
    pool = ThreadPoolExecutor(workers) if workers > 1 and a.n > 4 else None
    try:
        d = np.zeros((a.n, a.n))
        while True:
            # monotone in exact arithmetic; guard against LP round-off
            d = np.maximum(d, _apply_f(a, gamma, d, pool))
            yield d
    finally:
        if pool is not None:
            pool.shutdown()


def state_metric(a: Automaton, gamma: float, tol: float = 1e-9, max_iter: int = 10_000) -> StateMetricTable:
    """Least fixed point of the state-based game metric functional, by iteration.

    Stops when the sup-norm change drops below ``tol`` or after ``max_iter``
    iterations.  For ``gamma < 1`` the reported ``error_bound`` follows from the
    contraction; at ``gamma = 1`` it is only finite once an exact fixed point is
    hit.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prev = np.zeros((a.n, a.n))
    it = 0
    change = np.inf
    converged = False
    for d in state_metric_iterates(a, gamma):
        it += 1
        change = float(np.max(np.abs(d - prev))) if d.size else 0.0
        prev = d
        if change < tol or change == 0.0:
            converged = True
            break
        if it >= max_iter:
            break
    if change == 0.0:
        err = 0.0
    elif gamma < 1:
        err = gamma / (1 - gamma) * change
    else:
        err = np.inf
    return StateMetricTable(gamma, prev, it, converged, err)
