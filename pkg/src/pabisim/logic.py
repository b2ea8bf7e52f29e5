"""Quantitative modal logic over distributions.

Syntax (whitespace is insignificant)::

    B{{p,q},{}}        label-class set: total mass of states labelled {p,q} or {}
    (f + 0.25)         min(f + 0.25, 1); the constant may also be written 1/4
    !f                 1 - f
    /\\[f1,f2,...]      minimum of the children (nonempty)
    <a>f               sup over a-successors mu' of gamma * f(mu')

Evaluation returns interval bounds.  Only diamonds lose precision: their sup
over a successor polytope is taken on a barycentric grid, which gives a lower
bound, and every formula is 1-Lipschitz in total variation, so adding
``gamma * h`` for a grid of covering radius ``h`` gives an upper bound.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .dist_metric import MetricParams, d_ap_max_form, grid_points
from .io import IDENT
from .lifted import successor_polytope
from .model import Automaton, Distribution, input_enabled_view


@dataclass(frozen=True)
class Atom:
    classes: frozenset[frozenset[str]]

    def __str__(self) -> str:
        body = ",".join("{" + ",".join(sorted(c)) + "}" for c in sorted(self.classes, key=lambda c: sorted(c)))
        return f"B{{{body}}}"


@dataclass(frozen=True)
class Plus:
    child: "Formula"
    p: Fraction

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"constant {self.p} outside [0, 1]")

    def __str__(self) -> str:
        return f"({self.child} + {_fmt_const(self.p)})"


@dataclass(frozen=True)
class Neg:
    child: "Formula"

    def __str__(self) -> str:
        return f"!{self.child}"


@dataclass(frozen=True)
class Conj:
    children: tuple["Formula", ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("conjunction needs at least one conjunct")

    def __str__(self) -> str:
        return "/\\[" + ",".join(map(str, self.children)) + "]"


@dataclass(frozen=True)
class Diamond:
    action: str
    child: "Formula"

    def __str__(self) -> str:
        return f"<{self.action}>{self.child}"


Formula = Union[Atom, Plus, Neg, Conj, Diamond]


def _fmt_const(p: Fraction) -> str:
    d = p.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return f"{p.numerator}/{p.denominator}"
    s = f"{float(p):.15f}".rstrip("0").rstrip(".")
    return s if Fraction(s) == p else f"{p.numerator}/{p.denominator}"


def diamond_depth(f: Formula) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Diamond):
        return 1 + diamond_depth(f.child)
    if isinstance(f, Conj):
        return max(diamond_depth(c) for c in f.children)
    return diamond_depth(f.child)


def size(f: Formula) -> int:
    if isinstance(f, Atom):
        return 1
    if isinstance(f, Conj):
        return 1 + sum(size(c) for c in f.children)
    return 1 + size(f.child)


# -- parsing -------------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"position {pos}: {message}")
        self.pos = pos


_NAME = re.compile(IDENT)
_CONST = re.compile(r"[0-9]+(/[0-9]+|\.[0-9]*)?|\.[0-9]+")


class _Parser:
    def __init__(self, text: str):
        # positions refer to the text with whitespace removed
        self.s = "".join(text.split())
        self.i = 0

    def fail(self, msg: str):
        raise FormulaSyntaxError(msg, self.i)

    def eat(self, tok: str) -> bool:
        if self.s.startswith(tok, self.i):
            self.i += len(tok)
            return True
        return False

    def expect(self, tok: str):
        if not self.eat(tok):
            self.fail(f"expected {tok!r}")

    def name(self) -> str:
        m = _NAME.match(self.s, self.i)
        if not m:
            self.fail("expected a name")
        self.i = m.end()
        return m.group(0)

    def formula(self) -> Formula:
        if self.eat("B{"):
            classes = []
            if not self.eat("}"):
                while True:
                    classes.append(self.label_class())
                    if self.eat("}"):
                        break
                    self.expect(",")
            return Atom(frozenset(classes))
        if self.eat("!"):
            return Neg(self.formula())
        if self.eat("/\\["):
            kids = [self.formula()]
            while self.eat(","):
                kids.append(self.formula())
            self.expect("]")
            return Conj(tuple(kids))
        if self.eat("<"):
            act = self.name()
            self.expect(">")
            return Diamond(act, self.formula())
        if self.eat("("):
            child = self.formula()
            self.expect("+")
            m = _CONST.match(self.s, self.i)
            if not m:
                self.fail("expected a constant in [0, 1]")
            p = Fraction(m.group(0))
            if p > 1:
                self.fail(f"constant {m.group(0)} exceeds 1")
            self.i = m.end()
            self.expect(")")
            return Plus(child, p)
        self.fail("expected a formula")

    def label_class(self) -> frozenset[str]:
        self.expect("{")
        names = []
        if not self.eat("}"):
            while True:
                names.append(self.name())
                if self.eat("}"):
                    break
                self.expect(",")
        return frozenset(names)


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.i != len(p.s):
        p.fail("trailing input")
    return f


def check_formula(f: Formula, a: Automaton) -> None:
    """Raise KeyError for undeclared actions or propositions."""
    e = input_enabled_view(a)
    if isinstance(f, Atom):
        for c in f.classes:
            for nm in c:
                e.ap_index(nm)
    elif isinstance(f, Diamond):
        e.action_index(f.action)
        check_formula(f.child, a)
    elif isinstance(f, Conj):
        for c in f.children:
            check_formula(c, a)
    else:
        check_formula(f.child, a)


# -- evaluation ----------------------------------------------------------------

def _densities(grid: int) -> list[int]:
    out = [grid]
    while out[-1] % 2 == 0:
        out.append(out[-1] // 2)
    return out


class Evaluator:
    """Interval evaluation of formulas on one automaton, memoized."""

    def __init__(self, a: Automaton, p: MetricParams | None = None):
        self.p = p or MetricParams()
        self.e = input_enabled_view(a)
        self._memo: dict[tuple, tuple[float, float]] = {}
        self._grids: dict[tuple, list[tuple[list[Distribution], float]]] = {}
        self._classes: dict[frozenset[frozenset[str]], frozenset[frozenset[int]]] = {}

    def grids(self, mu: Distribution, act: int):
        key = (mu, act)
        if key not in self._grids:
            verts = successor_polytope(self.e, mu, act).vertices
            self._grids[key] = [
                grid_points(verts, m, self.p.max_grid_points)[:2] for m in _densities(self.p.grid)
            ]
        return self._grids[key]

    def atom_value(self, f: Atom, mu: Distribution) -> Fraction:
        cls = self._classes.get(f.classes)
        if cls is None:
            cls = self._classes[f.classes] = frozenset(
                frozenset(self.e.ap_index(nm) for nm in c) for c in f.classes
            )
        return sum((w for s, w in mu.items() if self.e.labels[s] in cls), Fraction(0))

    def __call__(self, f: Formula, mu: Distribution) -> tuple[float, float]:
        key = (f, mu)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if isinstance(f, Atom):
            v = float(self.atom_value(f, mu))
            out = (v, v)
        elif isinstance(f, Plus):
            lo, hi = self(f.child, mu)
            c = float(f.p)
            out = (min(lo + c, 1.0), min(hi + c, 1.0))
        elif isinstance(f, Neg):
            lo, hi = self(f.child, mu)
            out = (1.0 - hi, 1.0 - lo)
        elif isinstance(f, Conj):
            vals = [self(c, mu) for c in f.children]
            out = (min(v[0] for v in vals), min(v[1] for v in vals))
        elif isinstance(f, Diamond):
            act = self.e.action_index(f.action)
            g = self.p.gamma
            lo, hi = 0.0, 1.0
            for pts, h in self.grids(mu, act):
                vals = [self(f.child, w) for w in pts]
                lo = max(lo, g * max(v[0] for v in vals))
                hi = min(hi, g * max(v[1] for v in vals) + g * h)
            out = (lo, max(lo, min(hi, 1.0)))
        else:
            raise TypeError(f"not a formula: {f!r}")
        self._memo[key] = out
        return out


def evaluate(f: Formula, a: Automaton, mu: Distribution, p: MetricParams | None = None) -> tuple[float, float]:
    """Certified bounds on ``f(mu)``."""
    check_formula(f, a)
    return Evaluator(a, p)(f, mu)


def separation(ev: Evaluator, f: Formula, mu: Distribution, nu: Distribution) -> float:
    """Certified lower bound on ``|f(mu) - f(nu)|``."""
    lm, um = ev(f, mu)
    ln, un = ev(f, nu)
    return max(lm - un, ln - um, 0.0)


def logic_distance_lower(
    a: Automaton, mu: Distribution, nu: Distribution, formulas: Iterable[Formula], p: MetricParams | None = None
) -> float:
    ev = Evaluator(a, p)
    best = 0.0
    for f in formulas:
        check_formula(f, a)
        best = max(best, separation(ev, f, mu, nu))
    return best


# -- formula families ------------------------------------------------------------

def single_class_atoms(a: Automaton) -> list[Atom]:
    e = input_enabled_view(a)
    return [Atom(frozenset({frozenset(e.ap[i] for i in c)})) for c in e.label_classes]


def diamond_family(a: Automaton, depth: int) -> list[Formula]:
    """``<a_1>...<a_k> B{A}`` for every action word of length ``<= depth``."""
    e = input_enabled_view(a)
    level: list[Formula] = list(single_class_atoms(a))
    out = list(level)
    for _ in range(depth):
        level = [Diamond(act, f) for act in e.actions for f in level]
        out.extend(level)
    return out


def random_formula(a: Automaton, depth: int, rng: random.Random, width: int = 2) -> Formula:
    """Random formula of diamond-depth at most ``depth``."""
    e = input_enabled_view(a)
    classes = [frozenset(e.ap[i] for i in c) for c in e.label_classes]

    def atom() -> Atom:
        k = rng.randint(1, len(classes))
        return Atom(frozenset(rng.sample(classes, k)))

    def build(d: int) -> Formula:
        r = rng.random()
        if d == 0 or r < 0.2:
            f = atom()
        elif r < 0.6:
            f = Diamond(rng.choice(e.actions), build(d - 1))
        elif r < 0.8:
            f = Conj(tuple(build(d) if rng.random() < 0.5 else build(d - 1) for _ in range(rng.randint(1, width))))
        else:
            f = Neg(build(d))
        if rng.random() < 0.2:
            f = Plus(f, Fraction(rng.randint(0, 4), 8))
        return f

    return build(depth)


# -- distinguishing formulas -----------------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    formula: Formula
    separation: float  # certified lower bound on |f(mu) - f(nu)|
    mu_bounds: tuple[float, float]
    nu_bounds: tuple[float, float]


def _shift(f: Formula, c: float) -> Formula:
    c = Fraction(round(c, 9))
    c = min(max(c, Fraction(0)), Fraction(1))
    return f if c == 0 else Plus(f, c)


def _conj(fs: Sequence[Formula]) -> Formula:
    uniq = list(dict.fromkeys(fs))
    return uniq[0] if len(uniq) == 1 else Conj(tuple(uniq))


def distinguishing_search(
    a: Automaton,
    mu: Distribution,
    nu: Distribution,
    depth: int,
    p: MetricParams | None = None,
    witnesses: int = 8,
) -> SearchResult:
    """Best formula of diamond-depth ``<= depth`` found by a bounded search.

    Candidates are single-class atoms, the max-form label atom, and the
    construction ``<a> /\\_w (f_w + (top - f_w(mu')))`` where ``mu'`` is a
    vertex of ``mu``'s successor polytope and ``f_w`` separates ``mu'`` from
    the successor ``w`` of ``nu``; ``w`` ranges over at most ``witnesses``
    grid points.  Both orientations are tried.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    p = p or MetricParams()
    ev = Evaluator(a, p)
    e = ev.e
    atoms = single_class_atoms(a)
    memo: dict[tuple, tuple[Formula, float]] = {}

    def oriented(f: Formula, x: Distribution, y: Distribution) -> tuple[Formula, float]:
        """``f`` or ``!f``, whichever is larger on ``x``, with its certified margin."""
        lx, ux = ev(f, x)
        ly, uy = ev(f, y)
        if lx - uy >= ly - ux:
            return f, lx - uy
        return Neg(f), ly - ux

    def best(x: Distribution, y: Distribution, k: int) -> tuple[Formula, float]:
        """Formula with ``f(x) - f(y)`` as large as found (certified margin)."""
        key = (x, y, k)
        if key in memo:
            return memo[key]
        cands = [oriented(f, x, y) for f in atoms]
        val, subset = d_ap_max_form(e, x, y)
        if subset:
            cands.append(oriented(Atom(frozenset(frozenset(e.ap[i] for i in c) for c in subset)), x, y))
        if k > 0 and x != y:
            for act in range(len(e.actions)):
                for src, dst, flip in ((x, y, False), (y, x, True)):
                    verts = successor_polytope(e, src, act).vertices
                    pts = ev.grids(dst, act)[0][0]
                    if len(pts) > witnesses:
                        step = len(pts) / witnesses
                        pts = [pts[int(i * step)] for i in range(witnesses)]
                    for v in verts:
                        parts = [best(v, w, k - 1)[0] for w in pts]
                        top = max(ev(f, v)[0] for f in parts)
                        phi = Diamond(e.actions[act], _conj([_shift(f, top - ev(f, v)[0]) for f in parts]))
                        cands.append(oriented(Neg(phi) if flip else phi, x, y))
        f, m = max(cands, key=lambda t: (round(t[1], 12), -size(t[0])))
        memo[key] = (f, m)
        return f, m

    f, _ = best(mu, nu, depth)
    sep = separation(ev, f, mu, nu)
    return SearchResult(f, sep, ev(f, mu), ev(f, nu))
