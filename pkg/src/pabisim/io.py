"""Text format for probabilistic automata and distribution literals.

::

    pa <name>
    ap: p q
    actions: a b
    state <id> label {p,q}
    init: s0:1/2, s1:1/2
    trans <state> <action> -> s1:1/3, s2:2/3

Probabilities are ``n/m`` or terminating decimals, both read exactly.  ``#``
starts a comment.  A bare state name ``s`` stands for ``s:1``.
"""
from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .model import Automaton, Distribution, Transition, validate

IDENT = r"[A-Za-z_][A-Za-z0-9_.'\-]*"
_ident = re.compile(rf"^{IDENT}$")
_number = re.compile(r"^[0-9]+(/[0-9]+|\.[0-9]*)?$|^\.[0-9]+$")


class ModelSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        loc = f"line {line}, column {column}: " if line else ""
        super().__init__(loc + message)
        self.line = line
        self.column = column


class ModelValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("invalid automaton:\n  " + "\n  ".join(violations))
        self.violations = violations


def _prob(text: str, line: int, col: int) -> Fraction:
    text = text.strip()
    if not _number.match(text):
        raise ModelSyntaxError(f"malformed probability {text!r}", line, col)
    q = Fraction(text)
    return q


def _pairs(body: str, line: int, col0: int) -> list[tuple[str, Fraction, int]]:
    """``a:1/2, b:1/2`` (or a bare ``a``) -> [(name, weight, column)]."""
    out = []
    offset = 0
    for chunk in body.split(","):
        col = col0 + offset + (len(chunk) - len(chunk.lstrip()))
        offset += len(chunk) + 1
        chunk = chunk.strip()
        if not chunk:
            raise ModelSyntaxError("empty distribution entry", line, col)
        if ":" in chunk:
            name, _, w = chunk.partition(":")
            name = name.strip()
            weight = _prob(w, line, col + len(name) + 1)
        else:
            name, weight = chunk, Fraction(1)
        if not _ident.match(name):
            raise ModelSyntaxError(f"malformed state name {name!r}", line, col)
        out.append((name, weight, col))
    return out


def _labels(body: str, line: int, col: int) -> list[str]:
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ModelSyntaxError("label must be written {p,q}", line, col)
    inner = body[1:-1].strip()
    names = [x.strip() for x in inner.split(",")] if inner else []
    for nm in names:
        if not _ident.match(nm):
            raise ModelSyntaxError(f"malformed proposition {nm!r}", line, col)
    return names


def parse_model(text: str, check: bool = True) -> Automaton:
    """Parse the text format; with ``check`` the result must pass ``validate``."""
    name = None
    ap: list[str] | None = None
    actions: list[str] | None = None
    states: list[str] = []
    state_labels: list[tuple[list[str], int, int]] = []
    init = None
    trans = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()
        head, _, rest = stripped.partition(" ")
        if stripped.startswith("ap:"):
            if ap is not None:
                raise ModelSyntaxError("duplicate 'ap:' line", lineno, col)
            ap = stripped[3:].split()
            for p in ap:
                if not _ident.match(p):
                    raise ModelSyntaxError(f"malformed proposition {p!r}", lineno, col)
        elif stripped.startswith("actions:"):
            if actions is not None:
                raise ModelSyntaxError("duplicate 'actions:' line", lineno, col)
            actions = stripped[8:].split()
            for a in actions:
                if not _ident.match(a):
                    raise ModelSyntaxError(f"malformed action {a!r}", lineno, col)
        elif stripped.startswith("init:"):
            if init is not None:
                raise ModelSyntaxError("duplicate 'init:' line", lineno, col)
            init = (_pairs(stripped[5:], lineno, col + 5), lineno)
        elif head == "pa":
            if name is not None:
                raise ModelSyntaxError("duplicate 'pa' header", lineno, col)
            name = rest.strip()
            if not name:
                raise ModelSyntaxError("missing automaton name", lineno, col + 2)
        elif head == "state":
            m = re.match(rf"^state\s+({IDENT})\s*(?:label\s*(\{{.*\}}))?\s*$", stripped)
            if not m:
                raise ModelSyntaxError("expected 'state <id> label {..}'", lineno, col)
            sname = m.group(1)
            if sname in states:
                raise ModelSyntaxError(f"duplicate state declaration {sname!r}", lineno, col + 6)
            states.append(sname)
            labs = _labels(m.group(2), lineno, col + m.start(2)) if m.group(2) else []
            state_labels.append((labs, lineno, col))
        elif head == "trans":
            m = re.match(rf"^trans\s+({IDENT})\s+({IDENT})\s*->(.*)$", stripped)
            if not m:
                raise ModelSyntaxError("expected 'trans <state> <action> -> <distribution>'", lineno, col)
            pairs = _pairs(m.group(3), lineno, col + m.start(3))
            trans.append((m.group(1), m.group(2), pairs, lineno, col))
        else:
            raise ModelSyntaxError(f"unknown directive {head!r}", lineno, col)
    if name is None:
        raise ModelSyntaxError("missing 'pa <name>' header")
    ap = ap or []
    actions = actions or []
    sidx = {s: i for i, s in enumerate(states)}
    aidx = {a: i for i, a in enumerate(actions)}
    pidx = {p: i for i, p in enumerate(ap)}

    def state_ref(nm, ln, c):
        if nm not in sidx:
            raise ModelSyntaxError(f"undeclared state {nm!r}", ln, c)
        return sidx[nm]

    def dist(pairs, ln):
        acc: dict[int, Fraction] = {}
        for nm, w, c in pairs:
            i = state_ref(nm, ln, c)
            acc[i] = acc.get(i, Fraction(0)) + w
        return Distribution(acc)

    labels = []
    for labs, ln, c in state_labels:
        for p in labs:
            if p not in pidx:
                raise ModelSyntaxError(f"undeclared proposition {p!r}", ln, c)
        labels.append(frozenset(pidx[p] for p in labs))
    transitions = []
    for s, a, pairs, ln, c in trans:
        if a not in aidx:
            raise ModelSyntaxError(f"undeclared action {a!r}", ln, c)
        transitions.append(Transition(state_ref(s, ln, c), aidx[a], dist(pairs, ln)))
    if init is None:
        raise ModelSyntaxError("missing 'init:' line")
    aut = Automaton(
        name=name,
        ap=tuple(ap),
        actions=tuple(actions),
        states=tuple(states),
        labels=tuple(labels),
        transitions=tuple(transitions),
        initial=dist(*init),
    )
    if check:
        problems = validate(aut)
        if problems:
            raise ModelValidationError(problems)
    return aut


def load_model(path: str | Path, check: bool = True) -> Automaton:
    return parse_model(Path(path).read_text(), check=check)


def _fmt(q: Fraction) -> str:
    return str(q)


def serialize_model(a: Automaton) -> str:
    lines = [f"pa {a.name}", "ap: " + " ".join(a.ap), "actions: " + " ".join(a.actions)]
    for s, nm in enumerate(a.states):
        labs = ",".join(a.ap[p] for p in sorted(a.labels[s]))
        lines.append(f"state {nm} label {{{labs}}}")
    lines.append("init: " + ", ".join(f"{a.states[s]}:{_fmt(w)}" for s, w in a.initial.items()))
    for t in a.transitions:
        body = ", ".join(f"{a.states[s]}:{_fmt(w)}" for s, w in t.target.items())
        lines.append(f"trans {a.states[t.source]} {a.actions[t.action]} -> {body}")
    return "\n".join(lines) + "\n"


class DistributionError(ValueError):
    pass


def parse_distribution(text: str, a: Automaton) -> Distribution:
    """``s0:1/2,s1:1/2`` or a bare state name (Dirac)."""
    try:
        pairs = _pairs(text, 0, 1)
    except ModelSyntaxError as exc:
        raise DistributionError(str(exc)) from None
    acc: dict[int, Fraction] = {}
    for nm, w, _ in pairs:
        if nm not in a.states:
            raise DistributionError(f"unknown state {nm!r}")
        i = a.states.index(nm)
        acc[i] = acc.get(i, Fraction(0)) + w
    mu = Distribution(acc)
    total = mu.total()
    if total != 1:
        raise DistributionError(f"mass {total} != 1")
    return mu
