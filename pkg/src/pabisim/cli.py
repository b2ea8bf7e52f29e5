"""Command-line interface.

Exit codes: 0 success or positive verdict, 1 negative (or undecided) verdict,
2 usage, parse or model errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import __version__
from .dist_metric import MetricParams, Verdict, approx_bisim, bisimilar, dist_metric
from .generate import GeneratorConfig, generate, perturb
from .io import DistributionError, ModelSyntaxError, ModelValidationError, load_model, parse_distribution, serialize_model
from .logic import FormulaSyntaxError, check_formula, distinguishing_search, evaluate, parse_formula, separation, Evaluator
from .model import NotReactiveError, bot_extend, direct_sum, input_enabled_view, reactive_view, validate
from .reactive import equiv_metric_lower, exact_equivalent
from .state_relations import prob_bisim_partition, state_metric


class UsageError(Exception):
    pass


def num(x: float | Fraction) -> dict[str, Any]:
    """Decimal (12 places) plus the exact rational when ``x`` is exact."""
    exact = str(x) if isinstance(x, Fraction) else None
    return {"decimal": f"{float(x):.12f}", "float": float(x), "exact": exact}


def show(x: float | Fraction) -> str:
    s = f"{float(x):.12f}"
    if isinstance(x, Fraction) and x.denominator != 1:
        s += f" ({x})"
    return s


def _params(args) -> MetricParams:
    return MetricParams(
        gamma=args.gamma,
        tol=args.tol,
        depth_cap=args.depth,
        grid=args.grid,
        node_budget=args.node_budget,
    )


def _word(names: Sequence[str], word: Sequence[int]) -> list[str]:
    return [names[i] for i in word]


def _fmt_word(w: list[str]) -> str:
    return "[" + ", ".join(w) + "]"


# -- commands: each returns (exit code, result dict, text lines) ---------------

def cmd_validate(args):
    a = load_model(args.file, check=False)
    problems = validate(a)
    if problems:
        return 1, {"valid": False, "violations": problems}, ["invalid"] + [f"  {p}" for p in problems]
    return 0, {"valid": True, "violations": []}, ["valid"]


def cmd_extend_bot(args):
    text = serialize_model(bot_extend(load_model(args.file)))
    return 0, {"model": text}, [text.rstrip("\n")]


def cmd_sum(args):
    s, _, _ = direct_sum(load_model(args.file1), load_model(args.file2))
    text = serialize_model(s)
    return 0, {"model": text}, [text.rstrip("\n")]


def cmd_state_bisim(args):
    a = load_model(args.file)
    blocks = prob_bisim_partition(a).named(a)
    return 0, {"blocks": blocks}, ["{" + ", ".join(b) + "}" for b in blocks]


def cmd_state_metric(args):
    a = load_model(args.file)
    e = input_enabled_view(a)
    t = state_metric(e, args.gamma, tol=args.tol, max_iter=args.max_iter)
    entries, lines = [], []
    for s in range(a.n):
        for r in range(s + 1, a.n):
            entries.append({"s": a.states[s], "t": a.states[r], "value": num(t[s, r])})
            lines.append(f"{a.states[s]}\t{a.states[r]}\t{show(t[s, r])}")
    res = {
        "gamma": args.gamma,
        "iterations": t.iterations,
        "converged": t.converged,
        "error_bound": t.error_bound if t.error_bound != float("inf") else None,
        "entries": entries,
    }
    head = f"# iterations {t.iterations}, error bound {t.error_bound:.3g}"
    return 0, res, [head] + lines


def _dists(args, a):
    return parse_distribution(args.mu, a), parse_distribution(args.nu, a)


def cmd_dist_metric(args):
    a = load_model(args.file)
    mu, nu = _dists(args, a)
    b = dist_metric(a, mu, nu, _params(args))
    res = {
        "lower": num(b.lower),
        "upper": num(b.upper),
        "nodes": b.nodes,
        "closed": b.closed,
        "exact_polytopes": b.exact_polytopes,
    }
    return 0, res, [f"[{show(b.lower)}, {show(b.upper)}]"]


def cmd_bisim(args):
    a = load_model(args.file)
    mu, nu = _dists(args, a)
    p = _params(args)
    if args.eps is not None:
        r = approx_bisim(a, mu, nu, args.eps, p)
    else:
        r = bisimilar(a, mu, nu, p)
    res = {"verdict": str(r.verdict), "lower": num(r.lower), "upper": num(r.upper), "method": r.method}
    lines = [str(r.verdict), f"interval [{show(r.lower)}, {show(r.upper)}]"]
    if r.witness is not None:
        w = _word(input_enabled_view(a).actions, r.witness)
        res["witness"] = w
        lines.append(f"witness {_fmt_word(w)}")
    return (0 if r.verdict == Verdict.YES else 1), res, lines


def _views(args):
    a1, a2 = load_model(args.file1), load_model(args.file2)
    return reactive_view(a1), reactive_view(a2)


def cmd_equiv(args):
    v1, v2 = _views(args)
    r = exact_equivalent(v1, v2)
    if r.equivalent:
        return 0, {"equivalent": True}, ["equivalent"]
    w = _word(v1.base.actions, r.word)
    res = {"equivalent": False, "word": w, "values": [num(r.values[0]), num(r.values[1])]}
    lines = ["inequivalent", f"word {_fmt_word(w)}", f"values {show(r.values[0])} vs {show(r.values[1])}"]
    return 1, res, lines


def cmd_equiv_metric(args):
    v1, v2 = _views(args)
    r = equiv_metric_lower(v1, v2, args.horizon)
    w = _word(v1.base.actions, r.word)
    res = {"bound": num(r.bound), "word": w, "horizon": args.horizon}
    return 0, res, [f"lower bound {show(r.bound)}", f"witness {_fmt_word(w)}"]


def cmd_logic(args):
    a = load_model(args.file)
    p = _params(args)
    mu = parse_distribution(args.mu, a)
    nu = parse_distribution(args.nu, a) if args.nu else None
    if args.search is not None:
        if nu is None:
            raise UsageError("--search needs --nu")
        r = distinguishing_search(a, mu, nu, args.search, p)
        res = {
            "formula": str(r.formula),
            "separation": num(r.separation),
            "mu": [num(r.mu_bounds[0]), num(r.mu_bounds[1])],
            "nu": [num(r.nu_bounds[0]), num(r.nu_bounds[1])],
        }
        return 0, res, [str(r.formula), f"separation {show(r.separation)}"]
    if args.formula is None:
        raise UsageError("give --formula or --search")
    f = parse_formula(args.formula)
    check_formula(f, a)
    ev = Evaluator(a, p)
    lo, hi = ev(f, mu)
    res = {"formula": str(f), "mu": [num(lo), num(hi)]}
    lines = [f"mu: [{show(lo)}, {show(hi)}]"]
    if nu is not None:
        lo2, hi2 = ev(f, nu)
        sep = separation(ev, f, mu, nu)
        res["nu"] = [num(lo2), num(hi2)]
        res["separation"] = num(sep)
        lines += [f"nu: [{show(lo2)}, {show(hi2)}]", f"separation {show(sep)}"]
    return 0, res, lines


def cmd_gen(args):
    cfg = GeneratorConfig(
        states=args.states,
        actions=args.actions,
        aps=args.aps,
        max_branch=args.max_branch,
        density=args.density,
        seed=args.seed,
        eps=Fraction(args.eps),
        input_enabled=args.input_enabled,
        reactive=args.reactive,
    )
    text = serialize_model(generate(cfg))
    return 0, {"model": text}, [text.rstrip("\n")]


def cmd_perturb(args):
    a = load_model(args.file)
    targets = None
    if args.target:
        targets = []
        for t in args.target:
            parts = t.split(",")
            if len(parts) != 4:
                raise UsageError(f"--target wants state,action,from,to; got {t!r}")
            targets.append(tuple(x.strip() for x in parts))
    text = serialize_model(perturb(a, Fraction(args.eps), args.seed, targets))
    return 0, {"model": text}, [text.rstrip("\n")]


# -- argument parsing ----------------------------------------------------------

def _metric_opts(p: argparse.ArgumentParser, gamma_default: float | None = 0.9) -> None:
    p.add_argument("--gamma", type=float, default=gamma_default, help="discount factor in (0, 1]")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--depth", type=int, default=None, help="depth cap (default: from gamma and tol)")
    p.add_argument("--grid", type=int, default=4, help="barycentric grid density on polytopes")
    p.add_argument("--node-budget", type=int, default=4000)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a machine-readable report")
    parser = argparse.ArgumentParser(prog="pabisim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check well-formedness")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("extend-bot", parents=[common], help="add the dead state")
    p.add_argument("file")
    p.set_defaults(func=cmd_extend_bot)

    p = sub.add_parser("sum", parents=[common], help="direct sum of two automata")
    p.add_argument("file1")
    p.add_argument("file2")
    p.set_defaults(func=cmd_sum)

    p = sub.add_parser("state-bisim", parents=[common], help="coarsest probabilistic bisimulation")
    p.add_argument("file")
    p.set_defaults(func=cmd_state_bisim)

    p = sub.add_parser("state-metric", parents=[common], help="state-based game metric table")
    p.add_argument("file")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.set_defaults(func=cmd_state_metric)

    for name, func, helptext in (
        ("dist-metric", cmd_dist_metric, "bounds on the distribution distance"),
        ("bisim", cmd_bisim, "distribution bisimilarity verdict"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("file")
        p.add_argument("--mu", required=True, help="distribution literal, e.g. s0:1/2,s1:1/2")
        p.add_argument("--nu", required=True)
        _metric_opts(p)
        if name == "bisim":
            p.add_argument("--eps", type=float, default=None, help="approximate bisimilarity threshold")
        p.set_defaults(func=func)

    p = sub.add_parser("equiv", parents=[common], help="language equivalence of reactive automata")
    p.add_argument("file1")
    p.add_argument("file2")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("equiv-metric", parents=[common], help="lower bound on the equivalence metric")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--horizon", type=int, required=True)
    p.set_defaults(func=cmd_equiv_metric)

    p = sub.add_parser("logic", parents=[common], help="evaluate or search modal formulas")
    p.add_argument("file")
    p.add_argument("--formula")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu")
    p.add_argument("--search", type=int, metavar="DEPTH", help="search a distinguishing formula")
    _metric_opts(p)
    p.set_defaults(func=cmd_logic)

    p = sub.add_parser("gen", parents=[common], help="random automaton")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--actions", type=int, default=1)
    p.add_argument("--aps", type=int, default=1)
    p.add_argument("--max-branch", type=int, default=2)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--eps", default="0", help="perturbation, e.g. 1/20")
    p.add_argument("--input-enabled", action="store_true")
    p.add_argument("--reactive", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("perturb", parents=[common], help="shift eps of mass along transitions")
    p.add_argument("file")
    p.add_argument("--eps", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", action="append", metavar="STATE,ACTION,FROM,TO")
    p.set_defaults(func=cmd_perturb)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, result, lines = args.func(args)
    except (
        UsageError,
        ModelSyntaxError,
        ModelValidationError,
        DistributionError,
        FormulaSyntaxError,
        NotReactiveError,
        KeyError,
        ValueError,
        OSError,
    ) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        if args.json:
            print(json.dumps({"command": args.command, "status": "error", "exit_code": 2, "error": msg}, indent=2))
        else:
            print(f"pabisim {args.command}: {msg}", file=sys.stderr)
        return 2
    if args.json:
        report = {"command": args.command, "status": "ok", "exit_code": code, "result": result}
        print(json.dumps(report, indent=2))
    else:
        print("\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())
