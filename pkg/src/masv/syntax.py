"""AST for the multi-agent decision specification language.

Terms are plain strings: an uppercase first letter marks a variable,
anything else is a constant. All nodes are frozen; `span` fields are
excluded from equality so a parse -> pretty-print -> parse round trip
yields structurally equal trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .diagnostics import Span


def is_var(term: str) -> bool:
    return term[0].isupper()


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...] = ()
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(self.args)})"

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> set[str]:
        return {a for a in self.args if is_var(a)}

    def is_ground(self) -> bool:
        return not any(is_var(a) for a in self.args)

    def substitute(self, binding: dict[str, str]) -> "Atom":
        return Atom(self.pred, tuple(binding.get(a, a) for a in self.args))


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


@dataclass(frozen=True)
class Rule:
    """Knowledge rule `head :- body`; an empty body is a fact."""

    head: Atom
    body: tuple[Literal, ...] = ()
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class MentalLiteral:
    """One `bel(...)`/`goal(...)` conjunct of a mental state condition."""

    op: str  # "bel" | "goal"
    atoms: tuple[Atom, ...]
    negated: bool = False

    def __str__(self) -> str:
        inner = f"{self.op}({', '.join(map(str, self.atoms))})"
        return f"not {inner}" if self.negated else inner


Msc = tuple[MentalLiteral, ...]


def msc_str(msc: Msc) -> str:
    return ", ".join(map(str, msc))


@dataclass(frozen=True)
class Effect:
    op: str  # "insert" | "delete"
    atom: Atom

    def __str__(self) -> str:
        return f"{self.op} {self.atom}"


@dataclass(frozen=True)
class Outcome:
    weight: Fraction
    effects: tuple[Effect, ...]


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple[tuple[str, str], ...]  # (variable, domain name)
    duration: int
    pre: Msc
    outcomes: tuple[Outcome, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DecisionRule:
    condition: Msc
    action: str
    args: tuple[str, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        call = self.action if not self.args else f"{self.action}({','.join(self.args)})"
        return f"if {msc_str(self.condition)} then {call}"


@dataclass(frozen=True)
class SendRule:
    condition: Msc
    atom: Atom
    to: str  # agent name or "all"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RecvRule:
    pattern: Atom
    sender: Optional[str]
    op: str  # "insert" | "delete"
    atom: Atom
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SafetyConstraint:
    """Conjunction of belief literals; free variables are universally
    quantified over their inferred domains."""

    literals: tuple[Literal, ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return "always " + ", ".join(
            ("not " if lit.negated else "") + f"bel({lit.atom})" for lit in self.literals
        )


@dataclass(frozen=True)
class AgentDecl:
    name: str
    beliefs: tuple[Atom, ...]
    goals: tuple[tuple[Atom, ...], ...]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SpecAst:
    domains: tuple[tuple[str, tuple[str, ...]], ...]
    knowledge: tuple[Rule, ...]
    actions: tuple[ActionDecl, ...]
    decision_rules: tuple[DecisionRule, ...]
    send_rules: tuple[SendRule, ...]
    recv_rules: tuple[RecvRule, ...]
    safety: tuple[SafetyConstraint, ...]
    agents: tuple[AgentDecl, ...]


def _weight_str(w: Fraction) -> str:
    """Weights render as decimal literals when exact, else as a fraction."""
    num, den = w.numerator, w.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    digits = max(twos, fives)
    if digits == 0:
        return str(num)
    scaled = num * (10**digits) // den
    text = str(scaled).rjust(digits + 1, "0")
    return f"{text[:-digits]}.{text[-digits:]}"


def pretty(ast: SpecAst) -> str:
    """Canonical source rendering; `parse(pretty(ast))` equals `ast`."""
    out: list[str] = ["system {"]
    out.append("  domains {")
    for name, consts in ast.domains:
        out.append(f"    {name} = {{{', '.join(consts)}}};")
    out.append("  }")
    if ast.knowledge:
        out.append("  knowledge {")
        for rule in ast.knowledge:
            out.append(f"    {rule}")
        out.append("  }")
    out.append("  actions {")
    for act in ast.actions:
        params = ", ".join(f"{v}: {d}" for v, d in act.params)
        out.append(f"    action {act.name}({params}) {{")
        if act.duration != 1:
            out.append(f"      duration {act.duration};")
        out.append(f"      pre {msc_str(act.pre)};")
        for oc in act.outcomes:
            out.append(f"      effect [{_weight_str(oc.weight)}] {{")
            for eff in oc.effects:
                out.append(f"        {eff};")
            out.append("      }")
        out.append("    }")
    out.append("  }")
    out.append("  rules {")
    for dr in ast.decision_rules:
        call = f"{dr.action}({', '.join(dr.args)})" if dr.args else f"{dr.action}()"
        out.append(f"    if {msc_str(dr.condition)} then {call};")
    out.append("  }")
    if ast.send_rules or ast.recv_rules:
        out.append("  comms {")
        for sr in ast.send_rules:
            out.append(f"    on {msc_str(sr.condition)} send {sr.atom} to {sr.to};")
        for rr in ast.recv_rules:
            frm = f" from {rr.sender}" if rr.sender else ""
            out.append(f"    on received {rr.pattern}{frm} do {rr.op} {rr.atom};")
        out.append("  }")
    if ast.safety:
        out.append("  safety {")
        for sc in ast.safety:
            out.append(f"    {sc};")
        out.append("  }")
    out.append("}")
    for agent in ast.agents:
        out.append(f"agent {agent.name} {{")
        out.append("  beliefs {")
        for atom in agent.beliefs:
            out.append(f"    {atom}.")
        out.append("  }")
        out.append("  goals {")
        for conj in agent.goals:
            out.append(f"    {' & '.join(map(str, conj))};")
        out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"


def ast_to_dict(ast: SpecAst) -> dict:
    """JSON-compatible structural dump, used for golden files and the API."""
    return {
        "domains": [{"name": n, "constants": list(cs)} for n, cs in ast.domains],
        "knowledge": [
            {
                "head": str(r.head),
                "body": [str(lit) for lit in r.body],
            }
            for r in ast.knowledge
        ],
        "actions": [
            {
                "name": a.name,
                "params": [{"var": v, "domain": d} for v, d in a.params],
                "duration": a.duration,
                "pre": [str(m) for m in a.pre],
                "outcomes": [
                    {
                        "weight": str(o.weight),
                        "effects": [str(e) for e in o.effects],
                    }
                    for o in a.outcomes
                ],
            }
            for a in ast.actions
        ],
        "decision_rules": [
            {
                "condition": [str(m) for m in r.condition],
                "action": r.action,
                "args": list(r.args),
            }
            for r in ast.decision_rules
        ],
        "send_rules": [
            {"condition": [str(m) for m in r.condition], "atom": str(r.atom), "to": r.to}
            for r in ast.send_rules
        ],
        "recv_rules": [
            {
                "pattern": str(r.pattern),
                "sender": r.sender,
                "op": r.op,
                "atom": str(r.atom),
            }
            for r in ast.recv_rules
        ],
        "safety": [[str(lit) for lit in c.literals] for c in ast.safety],
        "agents": [
            {
                "name": ag.name,
                "beliefs": [str(b) for b in ag.beliefs],
                "goals": [[str(a) for a in conj] for conj in ag.goals],
            }
            for ag in ast.agents
        ],
    }
