from fractions import Fraction as F

import pytest

from pabisim.exact_lp import convex_weights, feasible_point
from pabisim.lifted import (
    DecompositionError,
    NotInputEnabledError,
    combined_reachable,
    decompose_step,
    lifted_step_member,
    successor_polytope,
)
from pabisim.model import Automaton, Distribution, convex_combine

from conftest import dist


def segala():
    # s has two a-successors; t has one
    return Automaton.build(
        "seg", [], ["a"], {"s": [], "t": [], "u": [], "v": []},
        [
            ("s", "a", {"u": 1}),
            ("s", "a", {"v": 1}),
            ("t", "a", {"u": F(1, 2), "v": F(1, 2)}),
            ("u", "a", {"u": 1}),
            ("v", "a", {"v": 1}),
        ],
        "s",
    )


def test_feasible_point_exact():
    x = feasible_point([[F(1), F(1)], [F(1), F(-1)]], [F(1), F(0)])
    assert x == [F(1, 2), F(1, 2)]
    assert feasible_point([[F(1), F(1)]], [F(-1)]) is None


def test_convex_weights_inside_and_outside():
    pts = [{0: F(1)}, {1: F(1)}]
    w = convex_weights(pts, {0: F(1, 3), 1: F(2, 3)})
    assert w == [F(1, 3), F(2, 3)]
    assert convex_weights(pts, {2: F(1)}) is None


def test_combined_reachable():
    a = segala()
    assert combined_reachable(a, 0, 0, Distribution({2: F(1, 4), 3: F(3, 4)})) == [F(1, 4), F(3, 4)]
    assert combined_reachable(a, 1, 0, Distribution.dirac(2)) is None


def test_not_input_enabled_raises():
    a = Automaton.build("x", [], ["a", "b"], {"s": []}, [("s", "a", {"s": 1})], "s")
    with pytest.raises(NotInputEnabledError, match="b"):
        successor_polytope(a, Distribution.dirac(0), 1)


def test_example_lifted_transition(fig1_left):
    # 1/2 r1 + 1/2 r2 -a-> 1/3 s1 + 1/6 s2 + 1/6 s3 + 1/3 s4
    a = fig1_left
    mu = dist(a, "r1:1/2,r2:1/2")
    poly = successor_polytope(a, mu, 0)
    target = dist(a, "s1:1/3,s2:1/6,s3:1/6,s4:1/3")
    assert poly.vertices == (target,)
    assert lifted_step_member(poly, target) == [F(1)]


def test_polytope_vertices_of_segala_mixture():
    a = segala()
    mu = Distribution({0: F(1, 2), 1: F(1, 2)})
    poly = successor_polytope(a, mu, 0)
    assert set(poly.vertices) == {
        Distribution({2: F(3, 4), 3: F(1, 4)}),
        Distribution({2: F(1, 4), 3: F(3, 4)}),
    }
    mid = Distribution({2: F(1, 2), 3: F(1, 2)})
    w = lifted_step_member(poly, mid)
    assert w is not None and sum(w) == 1
    choice = poly.combined_choice(w)
    assert convex_combine([(mu[s], nu) for s, nu in choice.items()]) == mid
    assert lifted_step_member(poly, Distribution.dirac(2)) is None


def test_decompose_step_roundtrip():
    a = segala()
    parts = [(F(1, 2), Distribution.dirac(0)), (F(1, 2), Distribution({0: F(1, 2), 1: F(1, 2)}))]
    target = Distribution({2: F(1, 2), 3: F(1, 2)})
    nus = decompose_step(a, parts, 0, target)
    assert convex_combine([(w, nu) for (w, _), nu in zip(parts, nus)]) == target
    for (_, mu_i), nu_i in zip(parts, nus):
        assert lifted_step_member(successor_polytope(a, mu_i, 0), nu_i) is not None


def test_decompose_step_rejects_unreachable_target():
    a = segala()
    with pytest.raises(DecompositionError):
        decompose_step(a, [(F(1), Distribution.dirac(1))], 0, Distribution.dirac(2))
