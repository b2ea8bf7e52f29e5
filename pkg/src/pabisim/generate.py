"""Seeded random automata and epsilon-perturbation of transition weights."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Automaton, Distribution, Transition


@dataclass(frozen=True)
class GeneratorConfig:
    states: int = 4
    actions: int = 1
    aps: int = 1
    max_branch: int = 2  # base successors per (state, action)
    density: float = 1.0  # probability that a (state, action) pair is enabled
    seed: int = 0
    eps: Fraction = Fraction(0)
    max_support: int = 3
    max_weight: int = 4  # weights are k / total with 1 <= k <= max_weight
    input_enabled: bool = False
    reactive: bool = False


def random_distribution(
    states: Sequence[int], rng: random.Random, max_support: int = 3, max_weight: int = 4
) -> Distribution:
    k = rng.randint(1, min(max_support, len(states)))
    support = rng.sample(list(states), k)
    ws = [rng.randint(1, max_weight) for _ in support]
    total = sum(ws)
    return Distribution({s: Fraction(w, total) for s, w in zip(support, ws)})


def generate(config: GeneratorConfig) -> Automaton:
    """Random automaton; identical configs give identical automata."""
    if config.states < 1 or config.actions < 0 or config.aps < 0:
        raise ValueError("need at least one state and nonnegative action/AP counts")
    rng = random.Random(config.seed)
    n = config.states
    ap = tuple(f"p{i}" for i in range(config.aps))
    actions = tuple(f"a{i}" for i in range(config.actions))
    names = tuple(f"s{i}" for i in range(n))
    if config.reactive:
        full = frozenset(range(config.aps))
        labels = tuple(full if rng.random() < 0.5 else frozenset() for _ in range(n))
    else:
        labels = tuple(
            frozenset(p for p in range(config.aps) if rng.random() < 0.5) for _ in range(n)
        )
    trans = []
    enabled_all = config.input_enabled or config.reactive
    for s in range(n):
        for act in range(config.actions):
            if not enabled_all and rng.random() >= config.density:
                continue
            branch = 1 if config.reactive else rng.randint(1, config.max_branch)
            seen = []
            for _ in range(branch):
                mu = random_distribution(range(n), rng, config.max_support, config.max_weight)
                if mu not in seen:
                    seen.append(mu)
                    trans.append(Transition(s, act, mu))
    init = Distribution.dirac(0)
    aut = Automaton(f"rand{config.seed}", ap, actions, names, labels, tuple(trans), init)
    if config.eps:
        aut = perturb(aut, config.eps, config.seed)
    return aut


def perturb(
    a: Automaton,
    eps: Fraction | str | int,
    seed: int = 0,
    targets: Sequence[tuple[str, str, str, str]] | None = None,
) -> Automaton:
    """Move mass ``eps`` between two successor states of some transitions.

    ``targets`` lists ``(state, action, from_state, to_state)`` explicitly;
    otherwise transitions and state pairs are drawn from ``seed``.  Raises
    ValueError if ``eps`` exceeds the mass available to move.
    """
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return a
    trans = list(a.transitions)
    if targets is not None:
        for sname, aname, src, dst in targets:
            s, act = a.state_index(sname), a.action_index(aname)
            u, v = a.state_index(src), a.state_index(dst)
            k = next((i for i, t in enumerate(trans) if t.source == s and t.action == act), None)
            if k is None:
                raise ValueError(f"{sname} has no {aname}-transition")
            trans[k] = Transition(s, act, _shift(trans[k].target, u, v, eps))
    else:
        rng = random.Random(seed)
        eligible = [
            i for i, t in enumerate(trans)
            if len(t.target.support) >= 2 and any(w >= eps for _, w in t.target.items())
        ]
        if not eligible:
            raise ValueError(f"no transition has mass {eps} to move")
        chosen = [i for i in eligible if rng.random() < 0.5] or [rng.choice(eligible)]
        for i in chosen:
            mu = trans[i].target
            src = rng.choice([s for s, w in mu.items() if w >= eps])
            dst = rng.choice([s for s in mu.support if s != src])
            trans[i] = Transition(trans[i].source, trans[i].action, _shift(mu, src, dst, eps))
    return Automaton(a.name, a.ap, a.actions, a.states, a.labels, tuple(trans), a.initial)


def _shift(mu: Distribution, src: int, dst: int, eps: Fraction) -> Distribution:
    if mu[src] < eps:
        raise ValueError(f"cannot move {eps}: only {mu[src]} available")
    w = dict(mu.items())
    w[src] = w[src] - eps
    w[dst] = w.get(dst, Fraction(0)) + eps
    return Distribution(w)


def split_state(a: Automaton, seed: int = 0) -> Automaton:
    """Copy a random state and divide every incoming mass between the two copies.

    The copy has the same label and outgoing transitions, so the result is
    bisimilar state by state (and language equivalent for reactive automata).
    States are then shuffled.
    """
    rng = random.Random(seed)
    s = rng.randrange(a.n)
    new = a.n
    names = a.states + (_fresh_name(a.states[s], a.states),)
    labels = a.labels + (a.labels[s],)

    def split(mu: Distribution) -> Distribution:
        w = dict(mu.items())
        if s in w:
            k = Fraction(rng.randint(0, 4), 4)
            total = w[s]
            w[s] = total * k
            w[new] = total * (1 - k)
        return Distribution(w)

    trans = [Transition(t.source, t.action, split(t.target)) for t in a.transitions]
    trans += [Transition(new, t.action, t.target) for t in trans if t.source == s]
    perm = list(range(a.n + 1))
    rng.shuffle(perm)  # perm[old] = new index
    inv = sorted(range(a.n + 1), key=lambda i: perm[i])
    return Automaton(
        a.name + "_split",
        a.ap,
        a.actions,
        tuple(names[i] for i in inv),
        tuple(labels[i] for i in inv),
        tuple(Transition(perm[t.source], t.action, t.target.map_states(lambda x: perm[x])) for t in trans),
        split(a.initial).map_states(lambda x: perm[x]),
    )


def _fresh_name(base: str, taken: Sequence[str]) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"
