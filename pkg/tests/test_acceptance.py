"""Acceptance criteria, each run at its stated tolerance and time limit.

Every test appends one ``criterion N: PASS|FAIL ...`` line, printed at the end
of the pytest run.  Criterion 2 fails: the exact distance of the stated pair
is 0.02025 (see README).
"""
import json
import random
import time
from contextlib import contextmanager
from fractions import Fraction as F
from pathlib import Path

import pytest

from pabisim.cli import main
from pabisim.dist_metric import MetricParams, Verdict, approx_bisim, bisimilar, d_ap_exact, d_ap_max_form, dist_metric
from pabisim.generate import GeneratorConfig, generate, random_distribution, split_state
from pabisim.io import load_model, parse_distribution
from pabisim.logic import Evaluator, diamond_depth, diamond_family, distinguishing_search, logic_distance_lower, random_formula, separation
from pabisim.model import Distribution, direct_sum, input_enabled_view, reactive_view
from pabisim.reactive import equiv_metric_lower, exact_equivalent
from pabisim.state_relations import prob_bisim_partition, state_metric
from pabisim.transport import GroundMetric, lift_metric

from conftest import ACCEPTANCE
from oracles import coarsest_bisimulation

M = Path(__file__).resolve().parent.parent / "models"


class Check:
    def __init__(self):
        self.failures = []
        self.notes = []

    def __call__(self, ok, what):
        if not ok:
            self.failures.append(what)


@contextmanager
def criterion(n, title, limit):
    c = Check()
    t0 = time.perf_counter()
    try:
        yield c
    except Exception as exc:
        c.failures.append(f"{type(exc).__name__}: {exc}")
        raise
    finally:
        dt = time.perf_counter() - t0
        c(dt < limit, f"runtime {dt:.2f}s >= {limit}s")
        status = "PASS" if not c.failures else "FAIL"
        detail = "; ".join(c.failures + c.notes)
        ACCEPTANCE.append(f"criterion {n}: {status} {title} ({dt:.2f}s){': ' + detail if detail else ''}")
    assert not c.failures, "; ".join(c.failures)


def cli_json(capsys, *argv):
    main([str(x) for x in argv] + ["--json"])
    return json.loads(capsys.readouterr().out)


def test_criterion_1_fig1_qualitative(capsys):
    with criterion(1, "Fig. 1 partition and bisim yes", 1.0) as check:
        blocks = cli_json(capsys, "state-bisim", M / "fig1_sum.pa")["result"]["blocks"]
        sets = [set(b) for b in blocks]
        check(not any({"L.q", "R.q'"} <= b for b in sets), "q grouped with q'")
        check({"L.s1", "L.s3", "R.s1'"} in sets, "block {s1, s3, s1'} missing")
        check({"L.s2", "L.s4", "R.s2'"} in sets, "block {s2, s4, s2'} missing")
        r = cli_json(capsys, "bisim", M / "fig1_sum.pa", "--mu", "L.q", "--nu", "R.q'", "--gamma", "0.9")
        check(r["exit_code"] == 0 and r["result"]["verdict"] == "yes", f"verdict {r['result']['verdict']}")
        check(r["result"]["upper"]["float"] <= 1e-6, f"upper {r['result']['upper']['float']}")


def test_criterion_2_fig1_quantitative(capsys):
    with criterion(2, "Fig. 1 perturbed D(q, q') interval contains 0.0225, width <= 1e-3", 5.0) as check:
        r = cli_json(capsys, "dist-metric", M / "fig1_sum_eps.pa", "--mu", "L.q", "--nu", "R.q'", "--gamma", "0.9")
        lo, hi = r["result"]["lower"]["float"], r["result"]["upper"]["float"]
        check.notes.append(f"computed [{lo:.6f}, {hi:.6f}]")
        check(hi - lo <= 1e-3, f"width {hi - lo}")
        check(lo <= 0.0225 <= hi, "0.0225 not in interval")


def test_criterion_3_state_metric(capsys):
    with criterion(3, "Fig. 1 perturbed state metric at gamma = 1", 5.0) as check:
        r = cli_json(capsys, "state-metric", M / "fig1_sum_eps.pa", "--gamma", "1")
        vals = {(e["s"], e["t"]): e["value"]["float"] for e in r["result"]["entries"]}
        d1, d2 = vals[("L.r1", "R.r'")], vals[("L.q", "R.q'")]
        check.notes.append(f"d(r1,r')={d1:.6f}, d(q,q')={d2:.6f}")
        check(abs(d1 - 0.26667) <= 1e-4, "d(r1, r') off")
        check(abs(d2 - 0.24167) <= 1e-4, "d(q, q') off")


def test_criterion_4_dominance():
    with criterion(4, "dist-metric upper <= d_f on 50 automata x 10 pairs", 120.0) as check:
        p = MetricParams(gamma=0.9)
        worst = -1.0
        for seed in range(50):
            rng = random.Random(seed)
            a = generate(GeneratorConfig(states=rng.randint(2, 5), actions=rng.randint(1, 2), aps=rng.randint(1, 2),
                                         max_branch=2, density=0.8, seed=seed))
            t = state_metric(input_enabled_view(a), 0.9, tol=1e-10)
            for _ in range(10):
                s, u = rng.randrange(a.n), rng.randrange(a.n)
                b = dist_metric(a, Distribution.dirac(s), Distribution.dirac(u), p)
                worst = max(worst, b.upper - t[s, u])
        check.notes.append(f"max excess {worst:.2e}")
        check(worst <= 1e-6, "dominance violated")


def reactive_pair(seed):
    rng = random.Random(seed)
    acts = rng.randint(1, 2)
    a1 = generate(GeneratorConfig(states=rng.randint(1, 4), actions=acts, aps=1, seed=seed, reactive=True))
    if seed % 2 == 0:
        a2 = split_state(a1, seed)
    else:
        a2 = generate(GeneratorConfig(states=rng.randint(1, 5), actions=acts, aps=1, seed=seed + 1000, reactive=True))
    return reactive_view(a1), reactive_view(a2)


def test_criterion_5_reactive_agreement():
    with criterion(5, "exact equivalence <=> bisimilar <=> zero horizon bound, 50 pairs", 120.0) as check:
        p = MetricParams(gamma=1.0, tol=1e-4)
        n_eq = 0
        for seed in range(50):
            v1, v2 = reactive_pair(seed)
            exact = exact_equivalent(v1, v2).equivalent
            n_eq += exact
            s, i1, i2 = direct_sum(v1.base, v2.base)
            verdict = bisimilar(s, i1.dist(v1.base.initial), i2.dist(v2.base.initial), p).verdict
            check(exact == (verdict == Verdict.YES), f"seed {seed}: exact {exact}, bisimilar {verdict}")
            bound = equiv_metric_lower(v1, v2, v1.base.n + v2.base.n).bound
            check((bound == 0) == exact, f"seed {seed}: horizon bound {bound}, exact {exact}")
        check.notes.append(f"{n_eq} equivalent pairs")


def test_criterion_6_oracles():
    with criterion(6, "partition vs enumeration (30), lift vs TV (30)", 60.0) as check:
        for seed in range(30):
            rng = random.Random(seed)
            a = generate(GeneratorConfig(states=rng.randint(2, 5), actions=rng.randint(1, 2), aps=rng.randint(1, 2),
                                         max_branch=2, density=0.7, seed=seed, max_support=2, max_weight=2))
            if seed % 2:
                a = split_state(a, seed)  # guarantees a nontrivial block
            got = {frozenset(b) for b in prob_bisim_partition(a).blocks}
            check(got == coarsest_bisimulation(a), f"partition mismatch on seed {seed}")
        rng = random.Random(6)
        for _ in range(30):
            n = rng.randint(2, 8)
            mu = random_distribution(range(n), rng, max_support=n)
            nu = random_distribution(range(n), rng, max_support=n)
            val, _ = lift_metric(GroundMetric.discrete(n), mu, nu)
            check(abs(val - float(mu.tv(nu))) <= 1e-9, f"lift {val} vs TV {mu.tv(nu)}")


def test_criterion_7_pseudometric_suites():
    with criterion(7, "triangle, threshold monotonicity, d_AP identity (100 each)", 60.0) as check:
        p = MetricParams(gamma=0.9, node_budget=200)
        worst = -1.0
        for seed in range(100):
            rng = random.Random(seed)
            a = generate(GeneratorConfig(states=rng.randint(2, 4), actions=rng.randint(1, 2), aps=rng.randint(1, 2),
                                         max_branch=2, density=0.8, seed=seed))
            x, y, z = (random_distribution(range(a.n), rng) for _ in range(3))
            lhs = dist_metric(a, x, z, p).lower
            rhs = dist_metric(a, x, y, p).upper + dist_metric(a, y, z, p).upper
            worst = max(worst, lhs - rhs)
        check(worst <= p.tol, f"triangle excess {worst}")
        rank = {Verdict.NO: 0, Verdict.UNKNOWN: 1, Verdict.YES: 2}
        for seed in range(100):
            rng = random.Random(1000 + seed)
            a = generate(GeneratorConfig(states=rng.randint(2, 4), actions=rng.randint(1, 2), aps=1,
                                         max_branch=2, density=0.8, seed=1000 + seed))
            mu, nu = random_distribution(range(a.n), rng), random_distribution(range(a.n), rng)
            e1, e2 = sorted(rng.random() * 0.6 for _ in range(2))
            v1, v2 = approx_bisim(a, mu, nu, e1, p).verdict, approx_bisim(a, mu, nu, e2, p).verdict
            check(rank[v1] <= rank[v2], f"seed {seed}: {v1} at {e1:.3f} but {v2} at {e2:.3f}")
        for seed in range(100):
            rng = random.Random(2000 + seed)
            a = input_enabled_view(generate(GeneratorConfig(states=rng.randint(2, 6), aps=rng.randint(1, 3), seed=seed)))
            mu, nu = random_distribution(range(a.n), rng), random_distribution(range(a.n), rng)
            check(d_ap_exact(a, mu, nu) == d_ap_max_form(a, mu, nu)[0], f"d_AP forms differ on seed {seed}")
        check.notes.append(f"max triangle excess {worst:.2e}")


def test_criterion_8_logic():
    with criterion(8, "formula separation <= dist-metric upper; search on (r1, r')", 120.0) as check:
        p = MetricParams(gamma=0.9)
        worst, count = -1.0, 0
        for seed in range(20):
            rng = random.Random(seed)
            a = generate(GeneratorConfig(states=rng.randint(2, 4), actions=rng.randint(1, 2), aps=1,
                                         max_branch=2, density=0.8, seed=seed))
            mu, nu = random_distribution(range(a.n), rng), random_distribution(range(a.n), rng)
            upper = dist_metric(a, mu, nu, p).upper
            ev = Evaluator(a, p)
            for _ in range(5):
                f = random_formula(a, 3, rng)
                assert diamond_depth(f) <= 3
                worst = max(worst, separation(ev, f, mu, nu) - upper)
                count += 1
        check(count == 100, f"{count} formulas")
        check(worst <= 1e-4, f"separation exceeds upper by {worst}")
        a = load_model(M / "fig1_sum.pa")
        mu, nu = parse_distribution("L.r1", a), parse_distribution("R.r'", a)
        found = distinguishing_search(a, mu, nu, 1, p)
        check(found.separation >= 0.9 / 6 - 1e-4, f"search found {found.separation}")
        brute = logic_distance_lower(a, mu, nu, diamond_family(a, 2), p)
        check(abs(brute - 0.9 / 6) <= 1e-4, f"depth-2 family gives {brute}")
        check.notes.append(f"search {found.formula} = {found.separation:.6f}, max excess {worst:.2e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
