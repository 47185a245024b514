"""Well-formedness checking: domain typing, range restriction, weights.

Predicate argument domains are not declared in the surface language; they
are inferred by unifying, across the whole spec, the positions that share
constants, action parameters, or clause-local variables. Each position
must resolve to exactly one declared domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .diagnostics import Diagnostic, DiagnosticSink, Span, SpecError
from .stratify import StrataAssignment, check_stratification, spec_predicates
from .syntax import ActionDecl, Atom, Msc, SpecAst, is_var

_FALLBACK = Span.point(1, 1)


def _span(node) -> Span:
    return getattr(node, "span", None) or _FALLBACK


@dataclass
class ValidatedSpec:
    """A parsed spec plus everything later stages need: strata, the
    constant->domain map, and inferred predicate signatures."""

    ast: SpecAst
    strata: StrataAssignment
    domains: dict[str, tuple[str, ...]]
    const_domain: dict[str, str]
    signatures: dict[str, tuple[str, ...]]  # predicate -> argument domain names
    predicates: list[str]  # first-appearance order
    actions_by_name: dict[str, ActionDecl] = field(default_factory=dict)

    @property
    def agent_names(self) -> list[str]:
        return [a.name for a in self.ast.agents]


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def check_well_formed(ast: SpecAst, strata: StrataAssignment | None = None) -> ValidatedSpec:
    """Validate a parsed spec; raises SpecError with all diagnostics found."""
    if strata is None:
        strata = check_stratification(ast)
    sink = DiagnosticSink()

    domains: dict[str, tuple[str, ...]] = {}
    const_domain: dict[str, str] = {}
    for name, consts in ast.domains:
        if name in domains:
            sink.error(f"duplicate domain '{name}'", _FALLBACK)
            continue
        domains[name] = consts
        for c in consts:
            if c in const_domain:
                sink.error(
                    f"constant '{c}' declared in more than one domain "
                    f"('{const_domain[c]}' and '{name}')",
                    _FALLBACK,
                )
            else:
                const_domain[c] = name

    arities: dict[str, int] = {}
    uf = _UnionFind()
    # union-find nodes: ("pos", pred, i) | ("dom", domain) | ("var", scope_id, name)

    def note_atom(atom: Atom, scope: int) -> None:
        if atom.pred in arities and arities[atom.pred] != atom.arity:
            sink.error(
                f"arity mismatch for '{atom.pred}': used with {arities[atom.pred]} "
                f"and {atom.arity} arguments",
                _span(atom),
            )
            return
        arities.setdefault(atom.pred, atom.arity)
        for i, term in enumerate(atom.args):
            pos = ("pos", atom.pred, i)
            if is_var(term):
                uf.union(pos, ("var", scope, term))
            elif term in const_domain:
                uf.union(pos, ("dom", const_domain[term]))
            else:
                sink.error(f"undeclared constant '{term}'", _span(atom))

    def note_msc(msc: Msc, scope: int) -> None:
        for mlit in msc:
            for atom in mlit.atoms:
                note_atom(atom, scope)

    scope = 0
    for rule in ast.knowledge:
        scope += 1
        note_atom(rule.head, scope)
        for lit in rule.body:
            note_atom(lit.atom, scope)
        positive_vars = set()
        for lit in rule.body:
            if not lit.negated:
                positive_vars |= lit.atom.variables()
        for v in sorted(rule.head.variables() - positive_vars):
            sink.error(
                f"rule not range-restricted: head variable {v} does not occur "
                f"in a positive body literal",
                _span(rule),
            )
        for lit in rule.body:
            if lit.negated:
                for v in sorted(lit.atom.variables() - positive_vars):
                    sink.error(
                        f"rule not range-restricted: variable {v} in negated "
                        f"literal does not occur in a positive body literal",
                        _span(rule),
                    )

    for act in ast.actions:
        scope += 1
        param_vars = set()
        for var, dom in act.params:
            if var in param_vars:
                sink.error(f"duplicate parameter {var} in action '{act.name}'", _span(act))
            param_vars.add(var)
            if dom not in domains:
                sink.error(f"unknown domain '{dom}' in action '{act.name}'", _span(act))
            else:
                uf.union(("var", scope, var), ("dom", dom))
        note_msc(act.pre, scope)
        if act.duration < 1:
            sink.error(f"action '{act.name}': duration must be >= 1", _span(act))
        total = sum((o.weight for o in act.outcomes), Fraction(0))
        if total != 1:
            sink.error(f"action '{act.name}': weights sum to {total}", _span(act))
        for o in act.outcomes:
            if o.weight <= 0:
                sink.error(f"action '{act.name}': non-positive outcome weight", _span(act))
        bound = set(param_vars)
        for mlit in act.pre:
            if not mlit.negated:
                for atom in mlit.atoms:
                    bound |= atom.variables()
        for o in act.outcomes:
            for eff in o.effects:
                note_atom(eff.atom, scope)
                for v in sorted(eff.atom.variables() - bound):
                    sink.error(
                        f"action '{act.name}': unbound variable {v} in effect "
                        f"'{eff}'",
                        _span(act),
                    )

    actions_by_name: dict[str, ActionDecl] = {}
    for act in ast.actions:
        if act.name in actions_by_name:
            sink.error(f"duplicate action '{act.name}'", _span(act))
        actions_by_name.setdefault(act.name, act)

    for dr in ast.decision_rules:
        scope += 1
        note_msc(dr.condition, scope)
        bound = set()
        for mlit in dr.condition:
            if not mlit.negated:
                for atom in mlit.atoms:
                    bound |= atom.variables()
        act = actions_by_name.get(dr.action)
        if act is None:
            sink.error(f"unknown action '{dr.action}'", _span(dr))
            continue
        if len(dr.args) != len(act.params):
            sink.error(
                f"action '{dr.action}' expects {len(act.params)} arguments, "
                f"got {len(dr.args)}",
                _span(dr),
            )
            continue
        for arg, (pvar, pdom) in zip(dr.args, act.params):
            if is_var(arg):
                if arg not in bound:
                    sink.error(
                        f"unbound variable {arg} in action call '{dr.action}'", _span(dr)
                    )
                uf.union(("var", scope, arg), ("dom", pdom))
            elif arg in const_domain:
                if pdom in domains and const_domain[arg] != pdom:
                    sink.error(
                        f"argument '{arg}' of '{dr.action}' has domain "
                        f"'{const_domain[arg]}', expected '{pdom}'",
                        _span(dr),
                    )
            else:
                sink.error(f"undeclared constant '{arg}'", _span(dr))

    agent_names = {a.name for a in ast.agents}
    for sr in ast.send_rules:
        scope += 1
        note_msc(sr.condition, scope)
        note_atom(sr.atom, scope)
        bound = set()
        for mlit in sr.condition:
            if not mlit.negated:
                for atom in mlit.atoms:
                    bound |= atom.variables()
        for v in sorted(sr.atom.variables() - bound):
            sink.error(f"unbound variable {v} in sent atom '{sr.atom}'", _span(sr))
        if sr.to != "all" and sr.to not in agent_names:
            sink.error(f"unknown recipient agent '{sr.to}'", _span(sr))

    for rr in ast.recv_rules:
        scope += 1
        note_atom(rr.pattern, scope)
        note_atom(rr.atom, scope)
        if rr.sender is not None and rr.sender not in agent_names:
            sink.error(f"unknown sender agent '{rr.sender}'", _span(rr))
        for v in sorted(rr.atom.variables() - rr.pattern.variables()):
            sink.error(
                f"unbound variable {v} in receive effect '{rr.atom}'", _span(rr)
            )

    known_preds: set[str] = set()
    for rule in ast.knowledge:
        known_preds.add(rule.head.pred)
        for lit in rule.body:
            known_preds.add(lit.atom.pred)
    for agent in ast.agents:
        for atom in agent.beliefs:
            known_preds.add(atom.pred)
    for act in ast.actions:
        for o in act.outcomes:
            for eff in o.effects:
                known_preds.add(eff.atom.pred)
    for rr in ast.recv_rules:
        known_preds.add(rr.atom.pred)

    for sc in ast.safety:
        scope += 1
        for lit in sc.literals:
            note_atom(lit.atom, scope)
            if lit.atom.pred not in known_preds:
                sink.error(
                    f"safety constraint uses unknown predicate '{lit.atom.pred}' "
                    f"(not in knowledge, beliefs, or effects)",
                    _span(sc),
                )

    for agent in ast.agents:
        scope += 1
        for atom in agent.beliefs:
            note_atom(atom, scope)
            if not atom.is_ground():
                sink.error(f"belief '{atom}' of agent '{agent.name}' is not ground", _span(agent))
        for conj in agent.goals:
            for atom in conj:
                note_atom(atom, scope)
                if not atom.is_ground():
                    sink.error(
                        f"goal atom '{atom}' of agent '{agent.name}' is not ground",
                        _span(agent),
                    )

    # Resolve predicate signatures from the union-find classes.
    class_domain: dict = {}
    class_conflict: set = set()
    for name in domains:
        root = uf.find(("dom", name))
        if root in class_domain and class_domain[root] != name:
            class_conflict.add(root)
        class_domain[root] = name

    predicates = spec_predicates(ast)
    signatures: dict[str, tuple[str, ...]] = {}
    for pred in predicates:
        arity = arities.get(pred, 0)
        sig = []
        for i in range(arity):
            root = uf.find(("pos", pred, i))
            if root in class_conflict:
                sink.error(
                    f"conflicting domains inferred for argument {i + 1} of '{pred}'",
                    _FALLBACK,
                )
                sig.append("?")
            elif root in class_domain:
                sig.append(class_domain[root])
            else:
                sink.error(
                    f"cannot infer the domain of argument {i + 1} of '{pred}'; "
                    f"mention a constant or a typed action parameter there",
                    _FALLBACK,
                )
                sig.append("?")
        signatures[pred] = tuple(sig)

    sink.raise_if_any()
    return ValidatedSpec(
        ast=ast,
        strata=strata,
        domains=domains,
        const_domain=const_domain,
        signatures=signatures,
        predicates=predicates,
        actions_by_name=actions_by_name,
    )


def load_spec(source: str) -> ValidatedSpec:
    """parse + stratify + validate in one step."""
    from .parser import parse_spec

    ast = parse_spec(source)
    return check_well_formed(ast)
