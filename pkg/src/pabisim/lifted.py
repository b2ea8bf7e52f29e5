"""Combined transitions of states and lifted transitions of distributions.

The set of ``a``-successors of a distribution ``mu`` is the convex hull of the
finitely many pure-choice mixtures ``sum_s mu(s) * mu_s`` where each ``mu_s``
is a base ``a``-successor of ``s``; :class:`SuccessorPolytope` stores exactly
those vertices.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact_lp import convex_weights
from .model import Automaton, Distribution, convex_combine


class NotInputEnabledError(ValueError):
    pass


@dataclass(frozen=True)
class SuccessorPolytope:
    source: Distribution
    action: int
    vertices: tuple[Distribution, ...]
    # per vertex, the index of the base successor picked by each support state
    choices: tuple[tuple[int, ...], ...]
    generator: tuple[tuple[int, tuple[Distribution, ...]], ...]

    def combined_choice(self, weights: Sequence[Fraction]) -> dict[int, Distribution]:
        """Per-state combined transitions realising ``sum_v weights[v] * vertex_v``."""
        out = {}
        for k, (s, succ) in enumerate(self.generator):
            coeff = [Fraction(0)] * len(succ)
            for w, ch in zip(weights, self.choices):
                coeff[ch[k]] += w
            out[s] = convex_combine([(c, mu) for c, mu in zip(coeff, succ) if c])
        return out


def _require(a: Automaton, s: int, act: int) -> tuple[Distribution, ...]:
    succ = a.successors(s, act)
    if not succ:
        raise NotInputEnabledError(
            f"not input enabled: {a.states[s]} has no {a.actions[act]}-transition"
        )
    return succ


def combined_reachable(a: Automaton, s: int, act: int, target: Distribution) -> list[Fraction] | None:
    """Weights over the base ``act``-successors of ``s`` mixing to ``target``, or None."""
    succ = _require(a, s, act)
    return convex_weights([dict(mu.items()) for mu in succ], dict(target.items()))


def successor_polytope(a: Automaton, mu: Distribution, act: int) -> SuccessorPolytope:
    gen = tuple((s, _require(a, s, act)) for s in mu.support)
    vertices: list[Distribution] = []
    choices: list[tuple[int, ...]] = []
    seen = set()
    for choice in itertools.product(*(range(len(succ)) for _, succ in gen)):
        acc: dict[int, Fraction] = {}
        for (s, succ), k in zip(gen, choice):
            w = mu[s]
            for t, p in succ[k].items():
                acc[t] = acc.get(t, Fraction(0)) + w * p
        v = Distribution(acc)
        if v not in seen:
            seen.add(v)
            vertices.append(v)
            choices.append(choice)
    return SuccessorPolytope(mu, act, tuple(vertices), tuple(choices), gen)


def lifted_step_member(poly: SuccessorPolytope, candidate: Distribution) -> list[Fraction] | None:
    """Convex weights over ``poly.vertices`` reproducing ``candidate``, or None."""
    return convex_weights([dict(v.items()) for v in poly.vertices], dict(candidate.items()))


class DecompositionError(ValueError):
    pass


def decompose_step(
    a: Automaton,
    parts: Sequence[tuple[Fraction, Distribution]],
    act: int,
    combined_successor: Distribution,
) -> list[Distribution]:
    """Split a step of ``sum_i w_i * mu_i`` into steps ``mu_i -> nu_i``.

    The returned ``nu_i`` satisfy ``mu_i -act-> nu_i`` and
    ``sum_i w_i * nu_i == combined_successor``.
    """
    try:
        mu = convex_combine(parts)
    except ValueError as exc:
        raise DecompositionError(f"parts do not form a mixture: {exc}") from None
    poly = successor_polytope(a, mu, act)
    weights = lifted_step_member(poly, combined_successor)
    if weights is None:
        raise DecompositionError("combined_successor is not an a-successor of the mixture")
    per_state = poly.combined_choice(weights)
    out = []
    for _, mu_i in parts:
        acc: dict[int, Fraction] = {}
        for s, w in mu_i.items():
            # zero-weight parts may reach states outside supp(mu); any choice works there
            choice = per_state.get(s) or _require(a, s, act)[0]
            for t, p in choice.items():
                acc[t] = acc.get(t, Fraction(0)) + w * p
        out.append(Distribution(acc))
    return out
