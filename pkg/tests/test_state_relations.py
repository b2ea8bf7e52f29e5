import random
from fractions import Fraction as F

import numpy as np
import pytest

from pabisim.generate import GeneratorConfig, generate
from pabisim.model import Automaton, Distribution, input_enabled_view
from pabisim.state_relations import (
    lift_partition_check,
    prob_bisim_partition,
    state_metric,
    state_metric_iterates,
)

from oracles import coarsest_bisimulation


def test_fig1_partition(fig1_sum):
    blocks = {frozenset(b) for b in prob_bisim_partition(fig1_sum).named(fig1_sum)}
    assert frozenset({"L.s1", "L.s3", "R.s1'"}) in blocks
    assert frozenset({"L.s2", "L.s4", "R.s2'"}) in blocks
    assert frozenset({"L.q"}) in blocks and frozenset({"R.q'"}) in blocks


def test_combined_transition_matching():
    # t's successor is the midpoint of s's two successors: bisimilar only via combined transitions
    a = Automaton.build(
        "c", ["p"], ["a"], {"s": [], "t": [], "x": ["p"], "y": []},
        [("s", "a", {"x": 1}), ("s", "a", {"y": 1}), ("s", "a", {"x": F(1, 2), "y": F(1, 2)}),
         ("t", "a", {"x": 1}), ("t", "a", {"y": 1})],
        "s",
    )
    p = prob_bisim_partition(a)
    assert p.same_block(0, 1)


@pytest.mark.parametrize("seed", range(12))
def test_partition_matches_enumeration(seed):
    rng = random.Random(seed)
    a = generate(GeneratorConfig(states=rng.randint(2, 5), actions=rng.randint(1, 2), aps=1,
                                 max_branch=2, density=0.7, seed=seed, max_support=2, max_weight=2))
    got = {frozenset(b) for b in prob_bisim_partition(a).blocks}
    assert got == coarsest_bisimulation(a)


def test_lift_partition_check(fig1_sum):
    a = fig1_sum
    p = prob_bisim_partition(a)
    i = a.state_index
    assert lift_partition_check(p, Distribution.dirac(i("L.s1")), Distribution.dirac(i("R.s1'")))
    assert not lift_partition_check(p, Distribution.dirac(i("L.q")), Distribution.dirac(i("R.q'")))


def test_fig1_state_metric_values(fig1_sum_eps):
    e = input_enabled_view(fig1_sum_eps)
    t = state_metric(e, 1.0)
    i = e.state_index
    # 1/6 + eps1 and 1/6 + (eps1 + eps2)/2 with eps1 = 1/10, eps2 = 1/20
    assert t[i("L.r1"), i("R.r'")] == pytest.approx(1 / 6 + 0.1, abs=1e-9)
    assert t[i("L.r2"), i("R.r'")] == pytest.approx(1 / 6 + 0.05, abs=1e-9)
    assert t[i("L.q"), i("R.q'")] == pytest.approx(1 / 6 + 0.075, abs=1e-9)
    assert t.converged and t.error_bound == 0.0


def test_state_metric_is_pseudometric_and_monotone():
    a = input_enabled_view(generate(GeneratorConfig(states=5, actions=2, aps=1, seed=7, density=0.8)))
    it = state_metric_iterates(a, 0.8)
    prev = np.zeros((a.n, a.n))
    for _ in range(6):
        d = next(it)
        assert np.all(d >= prev - 1e-12)
        prev = d
    t = state_metric(a, 0.8)
    d = t.entries
    assert np.allclose(d, d.T) and np.allclose(np.diag(d), 0)
    n = a.n
    for x in range(n):
        for y in range(n):
            for z in range(n):
                assert d[x, z] <= d[x, y] + d[y, z] + 1e-9


def test_state_metric_labels_and_missing_actions():
    a = Automaton.build("m", ["p"], ["a"], {"s": [], "t": ["p"], "u": []}, [("s", "a", {"s": 1})], "s")
    t = state_metric(a, 0.5)
    assert t[0, 1] == 1.0  # labels differ
    assert t[0, 2] == 1.0  # s moves, u cannot: inf over nothing is 1


def test_state_metric_threads_env(monkeypatch):
    a = input_enabled_view(generate(GeneratorConfig(states=5, actions=2, aps=1, seed=3)))
    monkeypatch.setenv("PABISIM_THREADS", "1")
    one = state_metric(a, 0.9).entries
    monkeypatch.setenv("PABISIM_THREADS", "4")
    four = state_metric(a, 0.9).entries
    assert np.array_equal(one, four)


def test_state_metric_rejects_bad_gamma():
    a = generate(GeneratorConfig(states=2, seed=0))
    with pytest.raises(ValueError):
        state_metric(a, 0.0)
