"""Probabilistic automata, distributions and the structural operations on them.

Probabilities are :class:`fractions.Fraction` throughout this module.  States,
actions and atomic propositions are referred to by their index in the
declaration order of the owning :class:`Automaton`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

DEAD = "dead"

Rational = Fraction


class Distribution:
    """Sparse weight vector over state indices.

    Zero weights are dropped on construction.  The weights are *not* required
    to sum to one here, so that malformed input can be represented and then
    reported by :func:`validate`; use :meth:`is_valid` to check.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, weights: Mapping[int, Fraction | int | str] | Iterable[tuple[int, Fraction]] = ()):
        if isinstance(weights, Mapping):
            weights = weights.items()
        acc: dict[int, Fraction] = {}
        for s, w in weights:
            w = Fraction(w)
            acc[int(s)] = acc.get(int(s), Fraction(0)) + w
        self._items = tuple(sorted((s, w) for s, w in acc.items() if w != 0))
        self._hash = None

    @classmethod
    def dirac(cls, s: int) -> Distribution:
        return cls({s: Fraction(1)})

    @classmethod
    def uniform(cls, states: Iterable[int]) -> Distribution:
        states = list(states)
        return cls({s: Fraction(1, len(states)) for s in states})

    def __getitem__(self, s: int) -> Fraction:
        for t, w in self._items:
            if t == s:
                return w
        return Fraction(0)

    def items(self) -> tuple[tuple[int, Fraction], ...]:
        return self._items

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self._items)

    def total(self) -> Fraction:
        return sum((w for _, w in self._items), Fraction(0))

    def is_valid(self) -> bool:
        return all(w > 0 for _, w in self._items) and self.total() == 1

    def mass(self, states: Iterable[int]) -> Fraction:
        states = set(states)
        return sum((w for s, w in self._items if s in states), Fraction(0))

    def is_dirac(self) -> bool:
        return len(self._items) == 1

    def map_states(self, f) -> Distribution:
        return Distribution([(f(s), w) for s, w in self._items])

    def scaled(self, c: Fraction) -> dict[int, Fraction]:
        return {s: c * w for s, w in self._items}

    def to_array(self, n: int):
        import numpy as np

        v = np.zeros(n)
        for s, w in self._items:
            v[s] = float(w)
        return v

    def key(self, digits: int = 12) -> tuple:
        """Hashable key with weights rounded to ``digits`` decimals (memo use)."""
        return tuple((s, round(float(w), digits)) for s, w in self._items)

    def tv(self, other: Distribution) -> Fraction:
        """Total-variation distance ``1/2 * sum |mu(s) - nu(s)|``."""
        keys = set(self.support) | set(other.support)
        return sum((abs(self[s] - other[s]) for s in keys), Fraction(0)) / 2

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and self._items == other._items

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{s}:{w}" for s, w in self._items)
        return f"Distribution({body})"

    def format(self, names: Sequence[str]) -> str:
        return ", ".join(f"{names[s]}:{w}" for s, w in self._items)


def convex_combine(parts: Sequence[tuple[Fraction | int | str, Distribution]]) -> Distribution:
    """Pointwise mixture ``sum_i p_i * mu_i`` of distributions.

    Raises ValueError if a weight is negative or the weights do not sum to 1.
    """
    total = Fraction(0)
    acc: dict[int, Fraction] = {}
    for p, mu in parts:
        p = Fraction(p)
        if p < 0:
            raise ValueError(f"negative mixture weight {p}")
        total += p
        for s, w in mu.items():
            acc[s] = acc.get(s, Fraction(0)) + p * w
    if total != 1:
        raise ValueError(f"mixture weights sum to {total}, deviation {total - 1} from 1")
    return Distribution(acc)


class Transition(NamedTuple):
    source: int
    action: int
    target: Distribution


@dataclass(frozen=True, eq=False)
class Automaton:
    """Segala probabilistic automaton ``(S, Act, ->, L, alpha)``.

    ``labels[s]`` is a frozenset of indices into ``ap``.
    """

    name: str
    ap: tuple[str, ...]
    actions: tuple[str, ...]
    states: tuple[str, ...]
    labels: tuple[frozenset[int], ...]
    transitions: tuple[Transition, ...]
    initial: Distribution

    @classmethod
    def build(
        cls,
        name: str,
        ap: Sequence[str],
        actions: Sequence[str],
        states: Mapping[str, Iterable[str]],
        transitions: Iterable[tuple[str, str, Mapping[str, Fraction | int | str]]],
        initial: Mapping[str, Fraction | int | str] | str,
    ) -> Automaton:
        """Construct from names; ``states`` maps each state name to its label."""
        ap = tuple(ap)
        actions = tuple(actions)
        names = tuple(states)
        sidx = {s: i for i, s in enumerate(names)}
        pidx = {p: i for i, p in enumerate(ap)}
        aidx = {a: i for i, a in enumerate(actions)}
        labels = tuple(frozenset(pidx[p] for p in states[s]) for s in names)
        trans = tuple(
            Transition(sidx[s], aidx[a], Distribution({sidx[t]: w for t, w in tgt.items()}))
            for s, a, tgt in transitions
        )
        if isinstance(initial, str):
            initial = {initial: 1}
        init = Distribution({sidx[s]: w for s, w in initial.items()})
        return cls(name, ap, actions, names, labels, trans, init)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Automaton):
            return NotImplemented
        return (
            self.name == other.name
            and self.ap == other.ap
            and self.actions == other.actions
            and self.states == other.states
            and self.labels == other.labels
            and self.transitions == other.transitions
            and self.initial == other.initial
        )

    __hash__ = object.__hash__

    @property
    def n(self) -> int:
        return len(self.states)

    @cached_property
    def _succ(self) -> dict[tuple[int, int], tuple[Distribution, ...]]:
        out: dict[tuple[int, int], list[Distribution]] = {}
        for t in self.transitions:
            lst = out.setdefault((t.source, t.action), [])
            if t.target not in lst:
                lst.append(t.target)
        return {k: tuple(v) for k, v in out.items()}

    def successors(self, s: int, a: int) -> tuple[Distribution, ...]:
        """Base (non-combined) ``a``-successor distributions of ``s``."""
        return self._succ.get((s, a), ())

    def enabled(self, s: int) -> frozenset[int]:
        return frozenset(a for (t, a) in self._succ if t == s)

    @cached_property
    def input_enabled(self) -> bool:
        return all((s, a) in self._succ for s in range(self.n) for a in range(len(self.actions)))

    @cached_property
    def deterministic(self) -> bool:
        """Every enabled (state, action) pair has exactly one base successor."""
        return all(len(v) == 1 for v in self._succ.values())

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None

    def action_index(self, name: str) -> int:
        try:
            return self.actions.index(name)
        except ValueError:
            raise KeyError(f"undeclared action {name!r}") from None

    def ap_index(self, name: str) -> int:
        try:
            return self.ap.index(name)
        except ValueError:
            raise KeyError(f"undeclared proposition {name!r}") from None

    def label_names(self, s: int) -> frozenset[str]:
        return frozenset(self.ap[i] for i in self.labels[s])

    def class_masses(self, mu: Distribution) -> dict[frozenset[int], Fraction]:
        """``mu(A)`` for every label class ``A`` carrying positive mass."""
        out: dict[frozenset[int], Fraction] = {}
        for s, w in mu.items():
            out[self.labels[s]] = out.get(self.labels[s], Fraction(0)) + w
        return out

    @cached_property
    def label_classes(self) -> tuple[frozenset[int], ...]:
        """Label classes realized by some state, in first-occurrence order."""
        seen: list[frozenset[int]] = []
        for lab in self.labels:
            if lab not in seen:
                seen.append(lab)
        return tuple(seen)

    def reachable(self, sources: Iterable[int]) -> list[int]:
        seen = set(sources)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for a in range(len(self.actions)):
                for mu in self.successors(s, a):
                    for t in mu.support:
                        if t not in seen:
                            seen.add(t)
                            stack.append(t)
        return sorted(seen)

    @cached_property
    def cache(self) -> dict:
        """Scratch space for derived data (extensions, metric tables)."""
        return {}


def validate(a: Automaton) -> list[str]:
    """Every violated well-formedness condition, as readable messages."""
    out: list[str] = []
    for what, names in (("state", a.states), ("action", a.actions), ("proposition", a.ap)):
        seen = set()
        for nm in names:
            if nm in seen:
                out.append(f"duplicate {what} name {nm!r}")
            seen.add(nm)
    if len(a.labels) != a.n:
        out.append(f"{len(a.labels)} labels for {a.n} states")
    for s, lab in enumerate(a.labels):
        for p in sorted(lab):
            if not 0 <= p < len(a.ap):
                out.append(f"state {_name(a, s)}: label bit {p} is not a declared proposition")

    def check_dist(mu: Distribution, where: str) -> None:
        for s, w in mu.items():
            if not 0 <= s < a.n:
                out.append(f"{where}: mass {w} on undeclared state {s}")
            if w < 0:
                out.append(f"{where}: negative weight {w} on {_name(a, s)}")
        total = mu.total()
        if total != 1:
            out.append(f"{where}: mass sums to {total} (deficit {1 - total})")

    for t in a.transitions:
        if not 0 <= t.source < a.n:
            out.append(f"transition from undeclared state {t.source}")
            continue
        if not 0 <= t.action < len(a.actions):
            out.append(f"transition of {_name(a, t.source)} uses undeclared action {t.action}")
            continue
        check_dist(t.target, f"state {a.states[t.source]}, action {a.actions[t.action]}")
    check_dist(a.initial, "initial distribution")
    return out


def _name(a: Automaton, s: int) -> str:
    return a.states[s] if 0 <= s < a.n else str(s)


@dataclass(frozen=True)
class ReactiveCheck:
    reactive: bool
    state: int | None = None
    action: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.reactive


def is_reactive(a: Automaton) -> ReactiveCheck:
    """Input enabled, one successor per (state, action), labels empty or full."""
    full = frozenset(range(len(a.ap)))
    for s in range(a.n):
        if a.labels[s] not in (frozenset(), full):
            return ReactiveCheck(False, s, None, f"label of {a.states[s]} is neither empty nor AP")
        for act in range(len(a.actions)):
            k = len(a.successors(s, act))
            if k == 0:
                return ReactiveCheck(False, s, act, f"{a.states[s]} lacks action {a.actions[act]}")
            if k > 1:
                return ReactiveCheck(
                    False, s, act, f"{a.states[s]} has {k} distinct {a.actions[act]}-transitions"
                )
    return ReactiveCheck(True)


def _fresh(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def bot_extend(a: Automaton) -> Automaton:
    """Input-enabled extension: a dead state absorbing every disabled action.

    The dead state is appended last, so state indices of ``a`` are preserved.
    """
    if DEAD in a.ap:
        if not a.input_enabled:
            raise ValueError(
                f"proposition {DEAD!r} is already declared; rename it before extending"
            )
        dead = a.ap.index(DEAD)
        ap = a.ap
    else:
        dead = len(a.ap)
        ap = a.ap + (DEAD,)
    bot = a.n
    trans = list(a.transitions)
    for s in range(a.n):
        for act in range(len(a.actions)):
            if not a.successors(s, act):
                trans.append(Transition(s, act, Distribution.dirac(bot)))
    for act in range(len(a.actions)):
        trans.append(Transition(bot, act, Distribution.dirac(bot)))
    return Automaton(
        name=a.name,
        ap=ap,
        actions=a.actions,
        states=a.states + (_fresh("bot", a.states),),
        labels=a.labels + (frozenset({dead}),),
        transitions=tuple(trans),
        initial=a.initial,
    )


def input_enabled_view(a: Automaton) -> Automaton:
    """``a`` itself when input enabled, otherwise its dead-state extension (cached)."""
    if a.input_enabled:
        return a
    ext = a.cache.get("bot_extend")
    if ext is None:
        ext = a.cache["bot_extend"] = bot_extend(a)
    return ext


@dataclass(frozen=True)
class Injection:
    """Embedding of one summand's state indices into a direct sum."""

    offset: int
    size: int

    def __call__(self, s: int) -> int:
        if not 0 <= s < self.size:
            raise IndexError(s)
        return s + self.offset

    def dist(self, mu: Distribution) -> Distribution:
        return mu.map_states(self)


def direct_sum(a1: Automaton, a2: Automaton) -> tuple[Automaton, Injection, Injection]:
    """Disjoint union of two automata; states are renamed ``L.<s>`` and ``R.<s>``."""
    if set(a1.actions) != set(a2.actions):
        diff = sorted(set(a1.actions) ^ set(a2.actions))
        raise ValueError(f"action sets differ: {', '.join(diff)}")
    if set(a1.ap) != set(a2.ap):
        diff = sorted(set(a1.ap) ^ set(a2.ap))
        raise ValueError(f"proposition sets differ: {', '.join(diff)}")
    amap = [a1.actions.index(x) for x in a2.actions]
    pmap = [a1.ap.index(x) for x in a2.ap]
    inj1, inj2 = Injection(0, a1.n), Injection(a1.n, a2.n)
    trans = list(a1.transitions)
    for t in a2.transitions:
        trans.append(Transition(inj2(t.source), amap[t.action], inj2.dist(t.target)))
    labels = a1.labels + tuple(frozenset(pmap[p] for p in lab) for lab in a2.labels)
    summed = Automaton(
        name=f"{a1.name}+{a2.name}",
        ap=a1.ap,
        actions=a1.actions,
        states=tuple(f"L.{s}" for s in a1.states) + tuple(f"R.{s}" for s in a2.states),
        labels=labels,
        transitions=tuple(trans),
        initial=a1.initial,
    )
    return summed, inj1, inj2


@dataclass(frozen=True, eq=False)
class ReactiveView:
    """Matrix view ``M(a)`` of a reactive automaton plus its accepting set."""

    base: Automaton
    matrices: tuple[tuple[tuple[Fraction, ...], ...], ...]
    accepting: frozenset[int]

    @property
    def eta(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(1) if s in self.accepting else Fraction(0) for s in range(self.base.n))

    def matrix(self, action: str | int) -> tuple[tuple[Fraction, ...], ...]:
        if isinstance(action, str):
            action = self.base.action_index(action)
        return self.matrices[action]


class NotReactiveError(ValueError):
    def __init__(self, check: ReactiveCheck):
        super().__init__(f"automaton is not reactive: {check.reason}")
        self.check = check


def reactive_view(a: Automaton) -> ReactiveView:
    check = is_reactive(a)
    if not check:
        raise NotReactiveError(check)
    mats = []
    for act in range(len(a.actions)):
        rows = []
        for s in range(a.n):
            (mu,) = a.successors(s, act)
            rows.append(tuple(mu[t] for t in range(a.n)))
        mats.append(tuple(rows))
    full = frozenset(range(len(a.ap)))
    accepting = frozenset(s for s in range(a.n) if a.labels[s] == full)
    return ReactiveView(a, tuple(mats), accepting)
