"""Distribution-based bisimulation distance, approximate bisimilarity and bisimilarity.

The distance is the least fixed point of

    F(D)(mu, nu) = max(d_AP(mu, nu),
                       max_a sup_{mu -a-> mu'} inf_{nu -a-> nu'} gamma * D(mu', nu'),
                       and symmetrically)

on the dead-state extension of the automaton.  :func:`dist_metric` explores the
graph of distribution pairs reachable from ``(mu, nu)`` and iterates interval
bounds on it:

* the outer sup is taken over the vertices of the successor polytope only,
  which is exact because the distance is quasi-convex jointly in both
  arguments (a mixture of related pairs is related at the worst threshold);
* the inner inf is taken over a barycentric grid of the other polytope.  The
  grid minimum is an upper bound; subtracting the grid's covering radius ``h``
  in total variation gives a lower bound, since the distance never exceeds the
  total-variation distance and satisfies the triangle inequality;
* pairs left unexplored (depth cap or node budget) keep ``d_AP`` as the lower
  bound and ``min(1, TV, lifted state metric)`` as the upper bound.

Lower bounds iterate upward from ``d_AP``, upper bounds downward, and both are
sound after every sweep.
"""
from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lifted import successor_polytope
from .model import Automaton, Distribution, input_enabled_view
from .state_relations import lift_partition_check, prob_bisim_partition, state_metric
from .transport import transport


@dataclass(frozen=True)
class MetricParams:
    gamma: float = 0.9
    tol: float = 1e-6
    depth_cap: int | None = None  # None: derived from gamma and tol
    grid: int = 4  # subdivisions of the barycentric grid on each polytope
    node_budget: int = 4000
    max_grid_points: int = 64
    state_bound: bool = True  # seed upper bounds with the lifted state metric
    max_sweeps: int = 100_000

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.depth_cap is not None and self.depth_cap < 1:
            raise ValueError("depth_cap must be a positive integer")
        if self.grid < 1:
            raise ValueError("grid must be a positive integer")
        if self.node_budget < 1 or self.max_grid_points < 1:
            raise ValueError("node_budget and max_grid_points must be positive")

    @property
    def depth(self) -> int:
        if self.depth_cap is not None:
            return self.depth_cap
        if self.gamma < 1:
            return max(1, math.ceil(math.log(self.tol) / math.log(self.gamma)))
        return 200


# -- label distance ----------------------------------------------------------

def d_ap_exact(a: Automaton, mu: Distribution, nu: Distribution) -> Fraction:
    """``1/2 * sum_A |mu(A) - nu(A)|`` over realized label classes, exactly."""
    cm, cn = a.class_masses(mu), a.class_masses(nu)
    keys = set(cm) | set(cn)
    return sum((abs(cm.get(k, Fraction(0)) - cn.get(k, Fraction(0))) for k in keys), Fraction(0)) / 2


def d_ap_max_form(a: Automaton, mu: Distribution, nu: Distribution) -> tuple[Fraction, tuple[frozenset[int], ...]]:
    """``max_B sum_{A in B} (mu(A) - nu(A))`` with a maximizing set of classes."""
    cm, cn = a.class_masses(mu), a.class_masses(nu)
    best = tuple(A for A in a.label_classes if cm.get(A, 0) > cn.get(A, 0))
    value = sum((cm.get(A, Fraction(0)) - cn.get(A, Fraction(0)) for A in best), Fraction(0))
    return value, best


def d_ap(a: Automaton, mu: Distribution, nu: Distribution) -> float:
    half = d_ap_exact(a, mu, nu)
    assert half == d_ap_max_form(a, mu, nu)[0], "half-sum and max-form label distances disagree"
    return float(half)


# -- polytope grids ------------------------------------------------------------

def grid_points(vertices: Sequence[Distribution], m: int, cap: int) -> tuple[list[Distribution], float, int]:
    """Barycentric grid ``sum_i (n_i / m) * v_i`` and its covering radius.

    ``m`` is lowered until at most ``cap`` points remain (the vertices
    themselves are always kept).  Every point of the hull lies within the
    returned total-variation radius of some grid point.
    """
    k = len(vertices)
    if k == 1:
        return [vertices[0]], 0.0, m
    while m > 1 and math.comb(m + k - 1, k - 1) > cap:
        m -= 1
    pts: list[Distribution] = []
    seen = set()
    for bars in itertools.combinations(range(m + k - 1), k - 1):
        counts = np.diff((-1,) + bars + (m + k - 1,)) - 1
        acc: dict[int, Fraction] = {}
        for c, v in zip(counts, vertices):
            if c:
                w = Fraction(int(c), m)
                for s, p in v.items():
                    acc[s] = acc.get(s, Fraction(0)) + w * p
        d = Distribution(acc)
        if d not in seen:
            seen.add(d)
            pts.append(d)
    diam = max(float(u.tv(v)) for u, v in itertools.combinations(vertices, 2))
    # worst L1 rounding of a barycentric vector to the 1/m lattice, halved
    spread = min(Fraction(1), Fraction((k // 2) * ((k + 1) // 2), k * m))
    return pts, float(spread) * diam, m


# -- pair memo -----------------------------------------------------------------

def pair_key(mu: Distribution, nu: Distribution, digits: int = 12) -> tuple:
    """Canonical, swap-symmetric hash key (weights rounded to ``digits``)."""
    k1, k2 = mu.key(digits), nu.key(digits)
    return (k1, k2) if k1 <= k2 else (k2, k1)


class PairMemo:
    """Interval bounds on the distance, keyed by canonical distribution pairs.

    Updates intersect with what is stored, so intervals only ever tighten.
    """

    def __init__(self):
        self._bounds: dict[tuple, tuple[float, float]] = {}

    def get(self, mu: Distribution, nu: Distribution) -> tuple[float, float] | None:
        return self._bounds.get(pair_key(mu, nu))

    def get_key(self, key) -> tuple[float, float] | None:
        return self._bounds.get(key)

    def update_key(self, key, lower: float, upper: float) -> tuple[float, float]:
        old = self._bounds.get(key)
        if old is not None:
            lower, upper = max(lower, old[0]), min(upper, old[1])
        if lower > upper:  # only float round-off can cause this
            lower = upper = (lower + upper) / 2
        self._bounds[key] = (lower, upper)
        return lower, upper

    def update(self, mu: Distribution, nu: Distribution, lower: float, upper: float) -> tuple[float, float]:
        return self.update_key(pair_key(mu, nu), lower, upper)

    def __len__(self) -> int:
        return len(self._bounds)


def _memo(e: Automaton, gamma: float) -> PairMemo:
    return e.cache.setdefault(("pair_memo", gamma), PairMemo())


# -- the bound iteration -------------------------------------------------------

@dataclass(frozen=True)
class MetricBounds:
    lower: float
    upper: float
    nodes: int  # distribution pairs in the explored graph
    closed: bool  # no pair was left unexplored
    exact_polytopes: bool  # every polytope met was a single point
    sweeps: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __iter__(self):
        return iter((self.lower, self.upper))


class _Node:
    __slots__ = ("key", "mu", "nu", "depth", "dap", "terms")

    def __init__(self, key, mu, nu, depth, dap):
        self.key, self.mu, self.nu, self.depth, self.dap = key, mu, nu, depth, dap
        # None while unexplored; otherwise [(child ids, slack)], each term
        # standing for gamma * (min over children) with inf-slack ``slack``
        self.terms: list[tuple[tuple[int, ...], float]] | None = None


def _state_bound_table(e: Automaton, gamma: float, tol: float) -> tuple[np.ndarray, float] | None:
    key = ("state_bound", gamma)
    if key not in e.cache:
        table = state_metric(e, gamma, tol=min(tol * 1e-3, 1e-9), max_iter=2000)
        e.cache[key] = (table.entries, table.error_bound) if np.isfinite(table.error_bound) else None
    return e.cache[key]


def _lifted_bound(table, mu: Distribution, nu: Distribution) -> float:
    d, err = table
    rows, cols = mu.support, nu.support
    val, *_ = transport(d[np.ix_(rows, cols)], [float(w) for _, w in mu.items()], [float(w) for _, w in nu.items()])
    return val + err + 1e-12


def dist_metric(a: Automaton, mu: Distribution, nu: Distribution, p: MetricParams | None = None) -> MetricBounds:
    """Certified interval ``[lower, upper]`` around ``D_f(mu, nu)``."""
    p = p or MetricParams()
    e = input_enabled_view(a)
    gamma = p.gamma
    memo = _memo(e, gamma)
    if mu == nu:
        return MetricBounds(0.0, 0.0, 1, True, True, 0)
    if mu.key() > nu.key():
        mu, nu = nu, mu  # explore in canonical orientation
    sources = set(mu.support) | set(nu.support)
    if deterministic_fragment(e, sources) and deterministic_kernel(e, mu, nu) is None:
        return MetricBounds(0.0, 0.0, 1, True, True, 0)
    table = _state_bound_table(e, gamma, p.tol) if p.state_bound and gamma < 1 else None

    nodes: list[_Node] = []
    index: dict[tuple, int] = {}
    lower: list[float] = []
    upper: list[float] = []

    def node_id(m1: Distribution, m2: Distribution, depth: int) -> int | None:
        key = pair_key(m1, m2)
        if key[0] == key[1]:
            return None  # identical distributions: distance 0
        i = index.get(key)
        if i is not None:
            return i
        dap = float(d_ap_exact(e, m1, m2))
        hi = min(1.0, float(m1.tv(m2)))
        if table is not None:
            hi = min(hi, _lifted_bound(table, m1, m2))
        hi = max(hi, dap)
        known = memo.get_key(key)
        lo = dap
        if known is not None:
            lo, hi = max(lo, known[0]), min(hi, known[1])
        i = len(nodes)
        index[key] = i
        nodes.append(_Node(key, m1, m2, depth, dap))
        lower.append(lo)
        upper.append(hi)
        return i

    polys: dict[tuple, tuple] = {}

    def polytope(m: Distribution, act: int):
        key = (m, act)
        if key not in polys:
            poly = successor_polytope(e, m, act)
            pts, h, _ = grid_points(poly.vertices, p.grid, p.max_grid_points)
            polys[key] = (poly.vertices, pts, h)
        return polys[key]

    root = node_id(mu, nu, 0)
    queue = deque([root])
    queued = {root}
    closed = True
    exact_polys = True
    while queue:
        i = queue.popleft()
        node = nodes[i]
        if lower[i] >= upper[i]:
            node.terms = []  # already pinned down
            continue
        if node.depth >= p.depth or len(nodes) >= p.node_budget:
            closed = False
            continue
        terms = []
        for act in range(len(e.actions)):
            for src, dst in ((node.mu, node.nu), (node.nu, node.mu)):
                verts, _, _ = polytope(src, act)
                _, pts, h = polytope(dst, act)
                if h > 0:
                    exact_polys = False
                for v in verts:
                    if v in pts:
                        continue  # matched exactly: contributes 0
                    kids = []
                    for w in pts:
                        c = node_id(v, w, node.depth + 1)
                        if c is None:
                            break
                        kids.append(c)
                    else:
                        terms.append((tuple(kids), h))
        node.terms = terms
        for kids, _ in terms:
            for c in kids:
                if nodes[c].terms is None and c not in queued:
                    queued.add(c)
                    queue.append(c)
    sweeps, stable = _iterate(nodes, lower, upper, gamma, p)
    if closed and exact_polys and stable and gamma == 1:
        # a finite system without slack: the stable lower iterate is its least
        # fixed point, which is the distance itself (the upper iterate may sit
        # at a larger fixed point when gamma = 1)
        upper = list(lower)
    for n, lo, hi in zip(nodes, lower, upper):
        memo.update_key(n.key, lo, hi)
    lo, hi = memo.get_key(nodes[0].key)
    return MetricBounds(lo, hi, len(nodes), closed, exact_polys, sweeps)


def _iterate(nodes: list[_Node], lower: list[float], upper: list[float], gamma: float, p: MetricParams) -> tuple[int, bool]:
    """Gauss-Seidel sweeps tightening both bound vectors in place.

    Returns the number of sweeps and whether the lower vector became exactly
    stable.
    """
    active = [i for i in reversed(range(len(nodes))) if nodes[i].terms]
    threshold = 1e-3 * p.tol * (1 - gamma)
    dl = du = 0.0
    for sweep in range(1, p.max_sweeps + 1):
        dl = du = 0.0
        for i in active:
            n = nodes[i]
            lo = hi = n.dap
            for kids, h in n.terms:
                lo = max(lo, gamma * (min(lower[c] for c in kids) - h))
                hi = max(hi, gamma * min(upper[c] for c in kids))
            lo, hi = min(lo, 1.0), min(hi, 1.0)
            if lo > lower[i]:
                dl = max(dl, lo - lower[i])
                lower[i] = lo
            if hi < upper[i]:
                du = max(du, upper[i] - hi)
                upper[i] = hi
        if dl == 0.0 and du == 0.0:
            return sweep, True
        if max(dl, du) <= threshold:
            return sweep, dl == 0.0
    return p.max_sweeps, dl == 0.0


# -- verdicts ------------------------------------------------------------------

class Verdict(str, enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class VerdictReport:
    verdict: Verdict
    lower: float
    upper: float
    method: str  # "metric", "exact-deterministic" or "state-partition"
    witness: tuple[int, ...] | None = None  # distinguishing word, exact method only


def approx_bisim(a: Automaton, mu: Distribution, nu: Distribution, eps: float, p: MetricParams | None = None) -> VerdictReport:
    """Is ``mu ~_eps nu``?  Decided from the certified distance interval."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    eps = min(eps, 1.0)  # distances never exceed 1
    b = dist_metric(a, mu, nu, p)
    if b.upper <= eps:
        v = Verdict.YES
    elif b.lower > eps:
        v = Verdict.NO
    else:
        v = Verdict.UNKNOWN
    return VerdictReport(v, b.lower, b.upper, "metric")


def deterministic_fragment(e: Automaton, sources) -> bool:
    """Does every state reachable from ``sources`` have one successor per action?"""
    return all(len(e.successors(s, act)) == 1 for s in e.reachable(sources) for act in range(len(e.actions)))


def _row_step(e: Automaton, vec: dict[int, Fraction], act: int) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for s, w in vec.items():
        (succ,) = e.successors(s, act)
        for t, q in succ.items():
            out[t] = out.get(t, Fraction(0)) + w * q
    return {t: w for t, w in out.items() if w}


def deterministic_kernel(e: Automaton, mu: Distribution, nu: Distribution) -> tuple[int, ...] | None:
    """Exact bisimilarity on a single-successor fragment.

    There every lifted transition is unique, so ``mu ~ nu`` iff the label-class
    masses of ``mu M(w)`` and ``nu M(w)`` agree for every word ``w``.  The
    difference vectors ``(mu - nu) M(w)`` are explored breadth-first and kept
    only while they enlarge their exact span.  Returns None when bisimilar,
    otherwise a shortest word after which class masses differ.
    """
    from .reactive import RowBasis

    classes = e.label_classes
    diff = dict(mu.items())
    for s, w in nu.items():
        diff[s] = diff.get(s, Fraction(0)) - w
    basis = RowBasis()
    queue = deque([((), {s: w for s, w in diff.items() if w})])
    while queue:
        word, vec = queue.popleft()
        if not basis.add(vec):
            continue
        for A in classes:
            if sum((w for s, w in vec.items() if e.labels[s] == A), Fraction(0)) != 0:
                return word
        for act in range(len(e.actions)):
            queue.append((word + (act,), _row_step(e, vec, act)))
    return None


def bisimilar(a: Automaton, mu: Distribution, nu: Distribution, p: MetricParams | None = None) -> VerdictReport:
    """Is ``mu ~ nu``?

    Exact when the fragment reachable from both supports has a single
    successor per action (this covers reactive automata and their direct
    sums) or when ``mu`` and ``nu`` agree on the state-bisimulation classes;
    otherwise read off the distance interval against ``p.tol``.
    """
    p = p or MetricParams()
    e = input_enabled_view(a)
    if mu == nu:
        return VerdictReport(Verdict.YES, 0.0, 0.0, "metric")
    if deterministic_fragment(e, set(mu.support) | set(nu.support)):
        word = deterministic_kernel(e, mu, nu)
        if word is None:
            return VerdictReport(Verdict.YES, 0.0, 0.0, "exact-deterministic")
        # the witness word alone certifies gamma^|w| * d_AP after it
        x, y = dict(mu.items()), dict(nu.items())
        for act in word:
            x, y = _row_step(e, x, act), _row_step(e, y, act)
        lower = p.gamma ** len(word) * float(d_ap_exact(e, Distribution(x), Distribution(y)))
        b = dist_metric(a, mu, nu, replace(p, node_budget=min(p.node_budget, 500)))
        return VerdictReport(Verdict.NO, max(lower, b.lower), b.upper, "exact-deterministic", word)
    part = e.cache.get("prob_bisim")
    if part is None:
        part = e.cache["prob_bisim"] = prob_bisim_partition(e)
    if lift_partition_check(part, mu, nu):
        return VerdictReport(Verdict.YES, 0.0, 0.0, "state-partition")
    b = dist_metric(a, mu, nu, p)
    if b.upper <= p.tol:
        v = Verdict.YES
    elif b.lower > p.tol:
        v = Verdict.NO
    else:
        v = Verdict.UNKNOWN
    return VerdictReport(v, b.lower, b.upper, "metric")
