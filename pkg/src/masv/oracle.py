"""Brute-force reference implementation used to cross-check the main path.

Everything here is deliberately naive and independent of the engine in
logic/mental/tsgen: rule bodies are checked by enumerating substitutions
over the variables' domains, fixpoints recompute from scratch every round
(no delta sets, no caches), and BFS deduplicates states by linearly
scanning canonical serializations instead of hashing. Only the parsed
ValidatedSpec (front end) and the document schema are shared.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .syntax import Atom, Rule, is_var
from .validate import ValidatedSpec

GA = tuple[str, tuple[str, ...]]  # ground atom


class OracleCapExceeded(Exception):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"oracle state cap of {cap} exceeded")


def atom_text(ga: GA) -> str:
    pred, args = ga
    return f"{pred}({','.join(args)})" if args else pred


def _ground(atom: Atom, binding: dict[str, str]) -> GA:
    return (atom.pred, tuple(binding.get(a, a) if is_var(a) else a for a in atom.args))


# -- naive stratified fixpoint -------------------------------------------------


def _active_constants(facts: set[GA], rules) -> list[str]:
    consts = set()
    for _, args in facts:
        consts.update(args)
    for rule in rules:
        for a in rule.head.args:
            if not is_var(a):
                consts.add(a)
        for lit in rule.body:
            for a in lit.atom.args:
                if not is_var(a):
                    consts.add(a)
    return sorted(consts)


def _rule_vars(rule: Rule) -> list[str]:
    out = set(rule.head.variables())
    for lit in rule.body:
        out |= lit.atom.variables()
    return sorted(out)


def naive_minimal_model(facts: set[GA], rules, strata: dict[str, int]) -> set[GA]:
    """Full-recompute stratified fixpoint by substitution enumeration."""
    db = set(facts)
    consts = _active_constants(facts, rules)
    by_stratum: dict[int, list[Rule]] = {}
    for rule in rules:
        by_stratum.setdefault(strata.get(rule.head.pred, 0), []).append(rule)
    for s in sorted(by_stratum):
        changed = True
        while changed:
            changed = False
            for rule in by_stratum[s]:
                variables = _rule_vars(rule)
                for combo in itertools.product(consts, repeat=len(variables)):
                    binding = dict(zip(variables, combo))
                    if _body_holds(db, rule, binding):
                        head = _ground(rule.head, binding)
                        if head not in db:
                            db.add(head)
                            changed = True
    return db


def _body_holds(db: set[GA], rule: Rule, binding: dict[str, str]) -> bool:
    for lit in rule.body:
        present = _ground(lit.atom, binding) in db
        if lit.negated == present:
            return False
    return True


# -- naive mental-state layer ----------------------------------------------------


@dataclass(frozen=True)
class OMental:
    beliefs: frozenset[GA]
    goals: tuple[frozenset[GA], ...] = ()
    mailbox: tuple[tuple[str, GA], ...] = ()
    busy: Optional[tuple] = None  # (action, args, binding items, remaining)


OJoint = tuple[OMental, ...]


class OracleEval:
    """Naive evaluation over one validated spec. Properties and goal
    models are recomputed on every request."""

    def __init__(self, spec: ValidatedSpec):
        self.spec = spec
        self.rules = spec.ast.knowledge
        self.strata = spec.strata

    def property_of(self, beliefs: frozenset[GA]) -> set[GA]:
        return naive_minimal_model(set(beliefs), self.rules, self.strata)

    def goal_model(self, goal: frozenset[GA]) -> set[GA]:
        return naive_minimal_model(set(goal), self.rules, self.strata)

    def _var_domains(self, atoms) -> dict[str, str]:
        domains: dict[str, str] = {}
        for atom in atoms:
            sig = self.spec.signatures[atom.pred]
            for pos, term in enumerate(atom.args):
                if is_var(term):
                    domains.setdefault(term, sig[pos])
        return domains

    def msc_solutions(
        self, ms: OMental, msc, binding: Optional[dict[str, str]] = None
    ) -> list[dict[str, str]]:
        """Enumerate every domain-consistent substitution over the variables
        bound by positive conjuncts and keep those satisfying the condition."""
        binding = dict(binding) if binding else {}
        positive_atoms = [a for m in msc if not m.negated for a in m.atoms]
        domains = self._var_domains(positive_atoms)
        for m in msc:
            if m.negated:
                for v in self._var_domains(m.atoms):
                    if v not in domains and v not in binding:
                        raise ValueError(
                            f"unbound variable {v} in negated conjunct of the oracle"
                        )
        names = sorted(v for v in domains if v not in binding)
        columns = [sorted(self.spec.domains[domains[v]]) for v in names]
        prop = self.property_of(ms.beliefs)
        solutions = []
        for combo in itertools.product(*columns):
            full = dict(binding)
            full.update(zip(names, combo))
            if self._msc_holds(ms, msc, full, prop):
                solutions.append(full)
        solutions.sort(key=lambda b: tuple(b[v] for v in sorted(b)))
        return solutions

    def _msc_holds(self, ms: OMental, msc, binding, prop: set[GA]) -> bool:
        for m in msc:
            if m.op == "bel":
                sat = all(_ground(a, binding) in prop for a in m.atoms)
            else:
                sat = False
                for goal in ms.goals:
                    model = self.goal_model(goal)
                    if all(_ground(a, binding) in model for a in m.atoms):
                        sat = True
                        break
            if sat == m.negated:
                return False
        return True

    def drop_achieved(self, ms: OMental) -> OMental:
        if not ms.goals:
            return ms
        prop = self.property_of(ms.beliefs)
        kept = tuple(g for g in ms.goals if not set(g) <= prop)
        return replace(ms, goals=kept) if len(kept) != len(ms.goals) else ms

    def apply_effect_list(self, ms: OMental, effects) -> OMental:
        deletes = {ga for op, ga in effects if op == "delete"}
        inserts = {ga for op, ga in effects if op == "insert"}
        beliefs = frozenset((set(ms.beliefs) - deletes) | inserts)
        return self.drop_achieved(replace(ms, beliefs=beliefs))


# -- naive transition-system construction --------------------------------------------


def _odecision_doc(spec: ValidatedSpec, d: Optional[tuple]) -> dict:
    if d is None:
        return {"kind": "loop"}
    agent, rule, action, args, substitution, kind = d
    return {
        "kind": kind,
        "agent": spec.agent_names[agent],
        "rule": rule,
        "action": action,
        "args": list(args),
        "substitution": {v: c for v, c in substitution},
    }


def _omental_doc(ms: OMental) -> dict:
    doc = {
        "beliefs": sorted(atom_text(ga) for ga in ms.beliefs),
        "goals": [sorted(atom_text(ga) for ga in g) for g in ms.goals],
        "mailbox": [[sender, atom_text(ga)] for sender, ga in ms.mailbox],
        "busy": None,
    }
    if ms.busy is not None:
        action, args, binding, remaining = ms.busy
        doc["busy"] = {
            "action": action,
            "args": list(args),
            "binding": [[v, c] for v, c in binding],
            "remaining": remaining,
        }
    return doc


class OracleTS:
    def __init__(self, spec: ValidatedSpec, cap: int = 2000):
        self.spec = spec
        self.ev = OracleEval(spec)
        self.cap = cap

    # decisions ------------------------------------------------------------

    def agent_decisions(self, js: OJoint, idx: int) -> list[tuple]:
        ms = js[idx]
        if ms.busy is not None:
            action, args, _binding, _rem = ms.busy
            return [(idx, None, action, args, (), "continue")]
        out = []
        for rule_idx, dr in enumerate(self.spec.ast.decision_rules):
            action = self.spec.actions_by_name[dr.action]
            for sol in self.ev.msc_solutions(ms, dr.condition):
                args = tuple(sol.get(a, a) if is_var(a) else a for a in dr.args)
                params = {p: v for (p, _), v in zip(action.params, args)}
                if not self.ev.msc_solutions(ms, action.pre, params):
                    continue
                kind = "act" if action.duration == 1 else "start"
                out.append((idx, rule_idx, dr.action, args, tuple(sorted(sol.items())), kind))
        return out

    def enabled(self, js: OJoint) -> list[tuple]:
        out = []
        for i in range(len(js)):
            out.extend(self.agent_decisions(js, i))
        return out

    def branch_weights(self, js: OJoint, d: tuple) -> list[Fraction]:
        idx, _rule, action_name, _args, _sub, kind = d
        action = self.spec.actions_by_name[action_name]
        if kind == "act":
            n = len(action.outcomes)
        elif kind == "start":
            n = 1
        else:
            busy = js[idx].busy
            n = len(action.outcomes) if busy is not None and busy[3] == 1 else 1
        if n == 1:
            return [Fraction(1)]
        return [o.weight for o in action.outcomes]

    def _effect_binding(self, ms: OMental, action, args) -> dict[str, str]:
        params = {p: v for (p, _), v in zip(action.params, args)}
        solutions = self.ev.msc_solutions(ms, action.pre, params)
        first = dict(solutions[0]) if solutions else dict(params)
        effect_vars = set()
        for outcome in action.outcomes:
            for eff in outcome.effects:
                effect_vars |= eff.atom.variables()
        binding = {v: first[v] for v in effect_vars if v in first}
        binding.update(params)
        return binding

    # application ----------------------------------------------------------

    def apply(self, js: OJoint, d: tuple, outcome_idx: int) -> OJoint:
        idx, _rule, action_name, args, _sub, kind = d
        action = self.spec.actions_by_name[action_name]
        working = list(js)

        sender_name = self.spec.agent_names[idx]
        for sr in self.spec.ast.send_rules:
            for sol in self.ev.msc_solutions(js[idx], sr.condition):
                message = _ground(sr.atom, sol)
                if sr.to == "all":
                    recipients = [i for i in range(len(js)) if i != idx]
                else:
                    recipients = [self.spec.agent_names.index(sr.to)]
                for r in recipients:
                    working[r] = replace(
                        working[r], mailbox=working[r].mailbox + ((sender_name, message),)
                    )

        acting = working[idx]
        if kind == "act":
            binding = self._effect_binding(js[idx], action, args)
            effects = [
                (e.op, _ground(e.atom, binding))
                for e in action.outcomes[outcome_idx].effects
            ]
            working[idx] = self.ev.apply_effect_list(acting, effects)
        elif kind == "start":
            binding = self._effect_binding(js[idx], action, args)
            working[idx] = replace(
                acting,
                busy=(action_name, args, tuple(sorted(binding.items())), action.duration - 1),
            )
        else:
            busy = acting.busy
            a_name, a_args, a_binding, remaining = busy
            if remaining > 1:
                working[idx] = replace(acting, busy=(a_name, a_args, a_binding, remaining - 1))
            else:
                binding = dict(a_binding)
                effects = [
                    (e.op, _ground(e.atom, binding))
                    for e in action.outcomes[outcome_idx].effects
                ]
                working[idx] = self.ev.apply_effect_list(replace(acting, busy=None), effects)

        for i, ms in enumerate(working):
            if not ms.mailbox:
                continue
            effects = []
            for rr in self.spec.ast.recv_rules:
                for sender, (pred, gargs) in ms.mailbox:
                    if rr.sender is not None and rr.sender != sender:
                        continue
                    if rr.pattern.pred != pred or len(rr.pattern.args) != len(gargs):
                        continue
                    binding: dict[str, str] = {}
                    ok = True
                    for pat, val in zip(rr.pattern.args, gargs):
                        if is_var(pat):
                            if binding.setdefault(pat, val) != val:
                                ok = False
                                break
                        elif pat != val:
                            ok = False
                            break
                    if ok:
                        effects.append((rr.op, _ground(rr.atom, binding)))
            ms = replace(ms, mailbox=())
            working[i] = self.ev.apply_effect_list(ms, effects) if effects else ms
        return tuple(working)

    # exploration ----------------------------------------------------------

    def initial(self) -> OJoint:
        out = []
        for agent in self.spec.ast.agents:
            ms = OMental(
                beliefs=frozenset((a.pred, a.args) for a in agent.beliefs),
                goals=tuple(
                    frozenset((a.pred, a.args) for a in conj) for conj in agent.goals
                ),
            )
            out.append(self.ev.drop_achieved(ms))
        return tuple(out)

    def build_doc(self) -> dict:
        """ts document in the exact schema of the main path's ts.json."""
        init = self.initial()
        states: list[OJoint] = [init]
        keys: list[str] = [self._state_key(init)]
        transitions: list[dict] = []
        frontier = 0
        while frontier < len(states):
            sid = frontier
            frontier += 1
            js = states[sid]
            decisions = self.enabled(js)
            if not decisions:
                transitions.append(
                    {
                        "source": sid,
                        "decision": {"kind": "loop"},
                        "branches": [{"p": "1", "target": sid}],
                    }
                )
                continue
            for d in decisions:
                weights = self.branch_weights(js, d)
                branches: list[list] = []  # [Fraction, target]
                for k, weight in enumerate(weights):
                    target = self.apply(js, d, k)
                    key = self._state_key(target)
                    tid = None
                    for i, existing in enumerate(keys):  # linear scan, no hashing
                        if existing == key:
                            tid = i
                            break
                    if tid is None:
                        if len(states) + 1 > self.cap:
                            raise OracleCapExceeded(self.cap)
                        tid = len(states)
                        states.append(target)
                        keys.append(key)
                    for entry in branches:
                        if entry[1] == tid:
                            entry[0] += weight
                            break
                    else:
                        branches.append([weight, tid])
                transitions.append(
                    {
                        "source": sid,
                        "decision": _odecision_doc(self.spec, d),
                        "branches": [
                            {"p": str(p), "target": t} for p, t in branches
                        ],
                    }
                )
        safe, goal = self._labels(states)
        return {
            "version": 1,
            "agents": list(self.spec.agent_names),
            "initial": 0,
            "states": [[_omental_doc(ms) for ms in js] for js in states],
            "transitions": transitions,
            "labels": {"safe": safe, "goal": goal},
        }

    def _state_key(self, js: OJoint) -> str:
        return json.dumps([_omental_doc(ms) for ms in js], sort_keys=True)

    def _labels(self, states: list[OJoint]) -> tuple[list[int], list[int]]:
        safe_ids: list[int] = []
        goal_ids: list[int] = []
        spec = self.spec
        for sid, js in enumerate(states):
            ok = True
            for ms in js:
                prop = self.ev.property_of(ms.beliefs)
                for sc in spec.ast.safety:
                    domains: dict[str, str] = {}
                    for lit in sc.literals:
                        sig = spec.signatures[lit.atom.pred]
                        for pos, term in enumerate(lit.atom.args):
                            if is_var(term):
                                domains.setdefault(term, sig[pos])
                    names = sorted(domains)
                    columns = [sorted(spec.domains[domains[v]]) for v in names]
                    for combo in itertools.product(*columns):
                        gamma = dict(zip(names, combo))
                        for lit in sc.literals:
                            present = _ground(lit.atom, gamma) in prop
                            if lit.negated == present:
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if ok:
                safe_ids.append(sid)
            if all(not ms.goals for ms in js):
                goal_ids.append(sid)
        return safe_ids, goal_ids


def oracle_ts_doc(spec: ValidatedSpec, cap: int = 2000) -> dict:
    return OracleTS(spec, cap).build_doc()
