"""Stratification of the knowledge base's predicate dependency graph."""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import Atom, Rule, SpecAst

StrataAssignment = dict[str, int]


@dataclass
class CycleError(Exception):
    """A dependency cycle through negation; `path` starts and ends at the
    same predicate and traverses at least one negated edge."""

    path: list[str]

    def __str__(self) -> str:
        return "negative dependency cycle: " + " -> ".join(self.path)


def spec_predicates(ast: SpecAst) -> list[str]:
    """All predicates of the spec, in first-appearance (source) order."""
    seen: dict[str, None] = {}

    def visit(atom: Atom) -> None:
        seen.setdefault(atom.pred, None)

    for rule in ast.knowledge:
        visit(rule.head)
        for lit in rule.body:
            visit(lit.atom)
    for act in ast.actions:
        for mlit in act.pre:
            for atom in mlit.atoms:
                visit(atom)
        for outcome in act.outcomes:
            for eff in outcome.effects:
                visit(eff.atom)
    for dr in ast.decision_rules:
        for mlit in dr.condition:
            for atom in mlit.atoms:
                visit(atom)
    for sr in ast.send_rules:
        for mlit in sr.condition:
            for atom in mlit.atoms:
                visit(atom)
        visit(sr.atom)
    for rr in ast.recv_rules:
        visit(rr.pattern)
        visit(rr.atom)
    for sc in ast.safety:
        for lit in sc.literals:
            visit(lit.atom)
    for agent in ast.agents:
        for atom in agent.beliefs:
            visit(atom)
        for conj in agent.goals:
            for atom in conj:
                visit(atom)
    return list(seen)


def _dependency_edges(rules: tuple[Rule, ...]) -> dict[str, set[tuple[str, bool]]]:
    """head -> {(body predicate, negated)}"""
    deps: dict[str, set[tuple[str, bool]]] = {}
    for rule in rules:
        entry = deps.setdefault(rule.head.pred, set())
        for lit in rule.body:
            entry.add((lit.atom.pred, lit.negated))
    return deps


def check_stratification(ast: SpecAst) -> StrataAssignment:
    """Assign strata to every predicate of the spec.

    stratum(p) >= stratum(q) when p depends positively on q and
    stratum(p) > stratum(q) when negatively; raises CycleError when the
    dependency graph has a cycle through a negated edge.
    """
    preds = spec_predicates(ast)
    deps = _dependency_edges(ast.knowledge)

    cycle = _find_negative_cycle(deps)
    if cycle is not None:
        raise CycleError(cycle)

    strata = {p: 0 for p in preds}
    for p in deps:
        strata.setdefault(p, 0)
    changed = True
    rounds = 0
    limit = len(strata) + 1
    while changed:
        changed = False
        rounds += 1
        if rounds > limit:  # unreachable once the cycle check passed
            raise CycleError([p for p in deps] + [next(iter(deps), "?")])
        for head, body in deps.items():
            for pred, negated in body:
                need = strata.get(pred, 0) + (1 if negated else 0)
                if strata[head] < need:
                    strata[head] = need
                    changed = True
    return strata


def _find_negative_cycle(deps: dict[str, set[tuple[str, bool]]]) -> list[str] | None:
    """Return a cycle path through at least one negated edge, or None."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: dict[str, bool] = {}
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = [0]

    nodes = sorted(
        set(deps) | {p for body in deps.values() for p, _ in body}
    )
    adjacency = {n: sorted(deps.get(n, ())) for n in nodes}

    def strongconnect(root: str) -> None:
        work = [(root, iter(adjacency[root]))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            node, it = work[-1]
            advanced = False
            for succ, _neg in it:
                if succ not in index:
                    index[succ] = lowlink[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack[succ] = True
                    work.append((succ, iter(adjacency[succ])))
                    advanced = True
                    break
                if on_stack.get(succ):
                    lowlink[node] = min(lowlink[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)

    for node in nodes:
        if node not in index:
            strongconnect(node)

    for comp in sccs:
        members = set(comp)
        for src in sorted(members):
            for dst, negated in adjacency.get(src, ()):
                if negated and dst in members:
                    return _cycle_path(adjacency, members, src, dst)
    return None


def _cycle_path(adjacency, members: set[str], src: str, dst: str) -> list[str]:
    """Close the src -neg-> dst edge via a shortest dst ~> src path in the SCC."""
    if src == dst:
        return [src, src]
    parent: dict[str, str] = {}
    frontier = [dst]
    seen = {dst}
    while frontier and src not in parent:
        nxt: list[str] = []
        for node in frontier:
            for succ, _neg in adjacency.get(node, ()):
                if succ in members and succ not in seen:
                    seen.add(succ)
                    parent[succ] = node
                    nxt.append(succ)
        frontier = nxt
    walk = [src]
    node = src
    while node != dst:
        node = parent[node]
        walk.append(node)
    walk.reverse()  # dst, ..., src
    return [src] + walk
