"""Independent brute-force oracles used by the tests (float LPs, enumeration)."""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def in_hull(points, target) -> bool:
    """Is ``target`` a convex combination of ``points``?  (float LP)"""
    P = np.array(points, dtype=float).T
    k = P.shape[1]
    A = np.vstack([P, np.ones((1, k))])
    b = np.r_[np.array(target, dtype=float), 1.0]
    res = linprog(np.zeros(k), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    return res.status == 0


def is_stable(a, blocks) -> bool:
    """Is the equivalence with these blocks a probabilistic bisimulation?"""
    block_of = {}
    for k, b in enumerate(blocks):
        for s in b:
            block_of[s] = k

    def vec(mu):
        v = [Fraction(0)] * len(blocks)
        for s, w in mu.items():
            v[block_of[s]] += w
        return v

    for b in blocks:
        for s, t in itertools.permutations(b, 2):
            if a.labels[s] != a.labels[t]:
                return False
            for act in range(len(a.actions)):
                ss, ts = a.successors(s, act), a.successors(t, act)
                if bool(ss) != bool(ts):
                    return False
                tv = [vec(nu) for nu in ts]
                for mu in ss:
                    if not in_hull(tv, vec(mu)):
                        return False
    return True


def coarsest_bisimulation(a) -> set[frozenset[int]]:
    best = None
    for part in set_partitions(range(a.n)):
        if (best is None or len(part) < len(best)) and is_stable(a, part):
            best = part
    return {frozenset(b) for b in best}


def accept_bruteforce(matrices, accepting, alpha, word) -> Fraction:
    """Acceptance probability by explicit row-vector products."""
    n = len(matrices[0])
    vec = [alpha[s] for s in range(n)]
    for act in word:
        M = matrices[act]
        vec = [sum((vec[s] * M[s][t] for s in range(n)), Fraction(0)) for t in range(n)]
    return sum((vec[s] for s in accepting), Fraction(0))
