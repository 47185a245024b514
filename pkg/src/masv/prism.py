"""Prism MDP emission and the executable definition of the emitted subset.

The model is a single module with one state variable holding the explicit
state index; every transition becomes one command. `check_prism_syntax`
validates exactly the subset this encoder produces and doubles as the
round-trip parser for self-verification.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .diagnostics import Diagnostic, Span
from .mental import World
from .tsgen import TransitionSystem, state_summary


@dataclass
class PrismArtifacts:
    model_text: str
    properties_text: str
    state_comment_map: dict[int, str]


class EmptySystemError(Exception):
    pass


def format_probability(p: Fraction) -> str:
    """Exact decimal for terminating rationals (>= one decimal place),
    12 significant digits otherwise."""
    den = p.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{float(p):.12g}"
    digits = max(twos, fives, 1)
    scaled = p.numerator * (10**digits) // p.denominator
    text = str(scaled).rjust(digits + 1, "0")
    return f"{text[:-digits]}.{text[-digits:]}"


def encode_prism(world: World, ts: TransitionSystem) -> PrismArtifacts:
    """Emit the labeled transition system as a Prism MDP plus properties."""
    if not ts.states:
        raise EmptySystemError("cannot encode a system with no states")
    if ts.safe is None or ts.goal is None:
        raise ValueError("transition system must be labeled before encoding")

    n = len(ts.states)
    comments = {
        i: state_summary(world, js) for i, js in enumerate(ts.states)
    }
    lines: list[str] = ["mdp", ""]
    for i in range(n):
        lines.append(f"// s{i}: {comments[i]}")
    lines.append("")
    lines.append("module dm")
    lines.append(f"  s : [0..{n - 1}] init {ts.initial};")
    counters: dict[tuple, int] = {}
    for t in ts.transitions:
        if t.decision is None:
            key = ("loop",)
            label = f"loop_{counters.get(key, 0)}"
        else:
            key = (t.decision.agent, t.decision.action)
            label = f"a{t.decision.agent}_{t.decision.action}_{counters.get(key, 0)}"
        counters[key] = counters.get(key, 0) + 1
        updates = " + ".join(
            f"{format_probability(p)}:(s'={tid})" for p, tid in t.branches
        )
        lines.append(f"  [{label}] s={t.source} -> {updates};")
    lines.append("endmodule")
    lines.append("")
    lines.append(_label_line("safe", [i for i, v in enumerate(ts.safe) if v]))
    lines.append(_label_line("goal", [i for i, v in enumerate(ts.goal) if v]))
    model_text = "\n".join(lines) + "\n"
    return PrismArtifacts(
        model_text=model_text,
        properties_text=encode_properties(),
        state_comment_map=comments,
    )


def _label_line(name: str, ids: list[int]) -> str:
    expr = " | ".join(f"s={i}" for i in ids) if ids else "false"
    return f'label "{name}" = {expr};'


def encode_properties() -> str:
    """The fixed PCTL query set: goal reachability bounds and the safety
    check (the model is globally safe iff the third query equals 0)."""
    return 'Pmin=? [ F "goal" ]\nPmax=? [ F "goal" ]\nPmax=? [ F !"safe" ]\n'


# -- subset grammar -----------------------------------------------------------

_VAR_RE = re.compile(r"^s\s*:\s*\[0\.\.(\d+)\]\s*init\s*(\d+)\s*;$")
_CMD_RE = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]\s*s=(\d+)\s*->\s*(.+);$")
_BRANCH_RE = re.compile(r"^([0-9][0-9.eE+-]*)\s*:\s*\(s'=(\d+)\)$")
_LABEL_RE = re.compile(r'^label\s+"([A-Za-z_][A-Za-z0-9_]*)"\s*=\s*(.+);$')
_MODULE_RE = re.compile(r"^module\s+([A-Za-z_][A-Za-z0-9_]*)$")


@dataclass
class ParsedModel:
    num_states: int
    init: int
    commands: list[tuple[str, int, list[tuple[float, int]]]]
    labels: dict[str, set[int]]


def _parse(text: str) -> tuple[ParsedModel | None, list[Diagnostic]]:
    diags: list[Diagnostic] = []

    def err(msg: str, lineno: int) -> None:
        diags.append(Diagnostic(msg, Span.point(lineno, 1)))

    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("//", 1)[0].strip()
        if stripped:
            lines.append((lineno, stripped))

    pos = 0

    def cur():
        return lines[pos] if pos < len(lines) else (len(text.splitlines()) + 1, "")

    lineno, line = cur()
    if line != "mdp":
        err(f"expected 'mdp' header, found {line!r}", lineno)
        return None, diags
    pos += 1

    lineno, line = cur()
    if not _MODULE_RE.match(line):
        err(f"expected 'module <name>', found {line!r}", lineno)
        return None, diags
    pos += 1

    lineno, line = cur()
    m = _VAR_RE.match(line)
    if m is None:
        err(f"expected state variable declaration 's : [0..N] init I;', found {line!r}", lineno)
        return None, diags
    max_state, init = int(m.group(1)), int(m.group(2))
    num_states = max_state + 1
    if init >= num_states:
        err(f"initial state {init} out of range [0..{max_state}]", lineno)
    pos += 1

    commands: list[tuple[str, int, list[tuple[float, int]]]] = []
    seen_labels: set[str] = set()
    closed = False
    while pos < len(lines):
        lineno, line = cur()
        if line == "endmodule":
            closed = True
            pos += 1
            break
        m = _CMD_RE.match(line)
        if m is None:
            err(f"expected a command or 'endmodule', found {line!r}", lineno)
            return None, diags
        label, src = m.group(1), int(m.group(2))
        if label in seen_labels:
            err(f"duplicate command label '{label}'", lineno)
        seen_labels.add(label)
        if src >= num_states:
            err(f"command guard state {src} out of range", lineno)
        branches: list[tuple[float, int]] = []
        for part in m.group(3).split("+"):
            bm = _BRANCH_RE.match(part.strip())
            if bm is None:
                err(f"malformed update {part.strip()!r}", lineno)
                branches = []
                break
            prob, target = float(bm.group(1)), int(bm.group(2))
            if target >= num_states:
                err(f"update target state {target} out of range", lineno)
            branches.append((prob, target))
        if branches:
            total = sum(p for p, _ in branches)
            if abs(total - 1.0) > 1e-9:
                err(f"command probabilities != 1 (sum is {total!r})", lineno)
            commands.append((label, src, branches))
    if not closed:
        err("missing 'endmodule'", cur()[0])
        return None, diags

    labels: dict[str, set[int]] = {}
    while pos < len(lines):
        lineno, line = cur()
        m = _LABEL_RE.match(line)
        if m is None:
            err(f"expected a label definition, found {line!r}", lineno)
            return None, diags
        name, expr = m.group(1), m.group(2).strip()
        ids: set[int] = set()
        if expr != "false":
            for term in expr.split("|"):
                tm = re.match(r"^s=(\d+)$", term.strip())
                if tm is None:
                    err(f"malformed label term {term.strip()!r}", lineno)
                    break
                sid = int(tm.group(1))
                if sid >= num_states:
                    err(f"label state {sid} out of range", lineno)
                ids.add(sid)
        if name in labels:
            err(f"duplicate label '{name}'", lineno)
        labels[name] = ids
        pos += 1

    for name in ("safe", "goal"):
        if name not in labels:
            err(f'missing label "{name}"', cur()[0])

    model = ParsedModel(num_states=num_states, init=init, commands=commands, labels=labels)
    return (model if not diags else None), diags


def check_prism_syntax(text: str) -> list[Diagnostic]:
    """Validate text against the emitted-subset grammar; empty list = ok."""
    _model, diags = _parse(text)
    return diags


def parse_prism_model(text: str) -> ParsedModel:
    """Parse a model in the emitted subset; raises ValueError on diagnostics."""
    model, diags = _parse(text)
    if model is None:
        raise ValueError("; ".join(d.render() for d in diags))
    return model
