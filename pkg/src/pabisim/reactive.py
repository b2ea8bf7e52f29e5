"""Language equivalence of reactive automata and the equivalence metric.

``A(w) = alpha M(a_1) ... M(a_k) eta_F`` is computed with exact rationals.  The
decision procedure works in the joint space of concatenated row vectors
``(alpha_1 M_1(w), alpha_2 M_2(w))``: words are explored breadth-first and a
vector is kept only if it enlarges the span of those kept so far.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dist_metric import MetricParams, Verdict, bisimilar, dist_metric
from .model import Distribution, ReactiveView, direct_sum, reactive_view

Vector = dict[int, Fraction]


class RowBasis:
    """Incrementally maintained echelon basis of sparse rational row vectors."""

    def __init__(self):
        self.rows: list[tuple[int, Vector]] = []

    def reduce(self, vec: Vector) -> Vector:
        vec = dict(vec)
        for pivot, row in self.rows:
            c = vec.get(pivot)
            if c:
                for k, w in row.items():
                    x = vec.get(k, Fraction(0)) - c * w
                    if x:
                        vec[k] = x
                    else:
                        vec.pop(k, None)
        return vec

    def add(self, vec: Vector) -> bool:
        """Insert ``vec``; False (and no change) if it already lies in the span."""
        r = self.reduce(vec)
        if not r:
            return False
        pivot = min(r)
        c = r[pivot]
        self.rows.append((pivot, {k: w / c for k, w in r.items()}))
        return True

    def __len__(self) -> int:
        return len(self.rows)


def _word_ids(v: ReactiveView, word: Sequence[int | str]) -> tuple[int, ...]:
    out = []
    for x in word:
        if isinstance(x, str):
            out.append(v.base.action_index(x))
        elif 0 <= x < len(v.base.actions):
            out.append(x)
        else:
            raise KeyError(f"undeclared action {x!r}")
    return tuple(out)


def _step(v: ReactiveView, vec: Vector, act: int) -> Vector:
    m = v.matrices[act]
    out: Vector = {}
    for s, w in vec.items():
        for t, q in enumerate(m[s]):
            if q:
                out[t] = out.get(t, Fraction(0)) + w * q
    return {t: w for t, w in out.items() if w}


def _accept(v: ReactiveView, vec: Vector) -> Fraction:
    return sum((w for s, w in vec.items() if s in v.accepting), Fraction(0))


@dataclass(frozen=True)
class WordAcceptance:
    word: tuple[int, ...]
    value: Fraction

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise ValueError(f"acceptance value {self.value} outside [0, 1]")


def acceptance(v: ReactiveView, alpha: Distribution, word: Sequence[int | str]) -> Fraction:
    """``alpha M(a_1) ... M(a_k) eta_F``; the empty word gives ``alpha(F)``."""
    vec: Vector = dict(alpha.items())
    for act in _word_ids(v, word):
        vec = _step(v, vec, act)
    return _accept(v, vec)


def _aligned(v1: ReactiveView, v2: ReactiveView) -> list[int]:
    """Index in ``v2`` of each action of ``v1``."""
    a1, a2 = v1.base.actions, v2.base.actions
    if set(a1) != set(a2):
        diff = sorted(set(a1) ^ set(a2))
        raise ValueError(f"action sets differ: {', '.join(diff)}")
    return [a2.index(x) for x in a1]


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    word: tuple[int, ...] | None = None  # action ids of the first automaton
    values: tuple[Fraction, Fraction] | None = None
    basis_size: int = 0

    def __bool__(self) -> bool:
        return self.equivalent


def exact_equivalent(
    v1: ReactiveView,
    v2: ReactiveView,
    alpha1: Distribution | None = None,
    alpha2: Distribution | None = None,
) -> EquivalenceResult:
    """Decide ``A_1(w) = A_2(w)`` for all words; otherwise give a shortest witness."""
    amap = _aligned(v1, v2)
    alpha1 = v1.base.initial if alpha1 is None else alpha1
    alpha2 = v2.base.initial if alpha2 is None else alpha2
    n1 = v1.base.n
    basis = RowBasis()
    queue = deque([((), dict(alpha1.items()), dict(alpha2.items()))])
    while queue:
        word, x, y = queue.popleft()
        joint = dict(x)
        joint.update({n1 + t: w for t, w in y.items()})
        if not basis.add(joint):
            continue
        p, q = _accept(v1, x), _accept(v2, y)
        if p != q:
            return EquivalenceResult(False, word, (p, q), len(basis))
        for act in range(len(amap)):
            queue.append((word + (act,), _step(v1, x, act), _step(v2, y, amap[act])))
    return EquivalenceResult(True, basis_size=len(basis))


@dataclass(frozen=True)
class MetricLowerBound:
    bound: Fraction
    word: tuple[int, ...]
    words_checked: int

    def __float__(self) -> float:
        return float(self.bound)


def equiv_metric_lower(
    v1: ReactiveView,
    v2: ReactiveView,
    horizon: int,
    alpha1: Distribution | None = None,
    alpha2: Distribution | None = None,
) -> MetricLowerBound:
    """``max |A_1(w) - A_2(w)|`` over words of length at most ``horizon``.

    Only words whose joint vector repeats an earlier one exactly are skipped;
    span membership alone says nothing about the size of the gap.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    amap = _aligned(v1, v2)
    alpha1 = v1.base.initial if alpha1 is None else alpha1
    alpha2 = v2.base.initial if alpha2 is None else alpha2
    best, best_word, checked = Fraction(-1), (), 0
    seen = set()
    frontier = [((), dict(alpha1.items()), dict(alpha2.items()))]
    for depth in range(horizon + 1):
        nxt = []
        for word, x, y in frontier:
            key = (tuple(sorted(x.items())), tuple(sorted(y.items())))
            if key in seen:
                continue
            seen.add(key)
            checked += 1
            gap = abs(_accept(v1, x) - _accept(v2, y))
            if gap > best:
                best, best_word = gap, word
            if depth < horizon:
                for act in range(len(amap)):
                    nxt.append((word + (act,), _step(v1, x, act), _step(v2, y, amap[act])))
        frontier = nxt
    return MetricLowerBound(best, best_word, checked)


def brute_force_words(v1: ReactiveView, v2: ReactiveView, horizon: int) -> list[tuple[tuple[int, ...], Fraction, Fraction]]:
    """Every word up to ``horizon`` with both acceptance values (test oracle)."""
    amap = _aligned(v1, v2)
    out = []
    for k in range(horizon + 1):
        for word in itertools.product(range(len(amap)), repeat=k):
            out.append((word, acceptance(v1, v1.base.initial, word),
                        acceptance(v2, v2.base.initial, [amap[x] for x in word])))
    return out


@dataclass(frozen=True)
class CrosscheckReport:
    equivalent: bool
    bisimilar: Verdict
    metric_lower: float  # dist_metric lower bound in the direct sum
    metric_upper: float
    horizon_bounds: tuple[Fraction, ...] = field(default_factory=tuple)
    ordering_ok: bool = True  # every horizon bound <= metric upper + tol
    agreement: bool = True  # exact equivalence <=> bisimilar yes

    @property
    def ok(self) -> bool:
        return self.ordering_ok and self.agreement


def equiv_vs_bisim_crosscheck(v1: ReactiveView, v2: ReactiveView, p: MetricParams | None = None) -> CrosscheckReport:
    """Compare the three views of sameness for a reactive pair, in their direct sum."""
    p = p or MetricParams(gamma=1.0, tol=1e-4)
    s, inj1, inj2 = direct_sum(v1.base, v2.base)
    reactive_view(s)  # the direct sum of reactive automata is reactive
    mu, nu = inj1.dist(v1.base.initial), inj2.dist(v2.base.initial)
    exact = exact_equivalent(v1, v2)
    verdict = bisimilar(s, mu, nu, p)
    bounds = dist_metric(s, mu, nu, p)
    horizon = v1.base.n + v2.base.n
    hb = tuple(equiv_metric_lower(v1, v2, h).bound for h in range(horizon + 1))
    ordering = all(float(b) <= bounds.upper + p.tol for b in hb)
    agreement = exact.equivalent == (verdict.verdict == Verdict.YES)
    return CrosscheckReport(exact.equivalent, verdict.verdict, bounds.lower, bounds.upper, hb, ordering, agreement)
