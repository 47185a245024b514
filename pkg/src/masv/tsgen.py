"""Exhaustive transition-system generation by breadth-first exploration.

One agent acts per transition (interleaving semantics); which agent and
which decision is the MDP's nondeterministic choice, action outcomes are
its probabilistic branching. Durative actions occupy their agent via a
busy counter and apply effects on completion.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .logic import Interpretation, Substitution
from .mental import Busy, MentalState, World
from .syntax import Atom, Effect, is_var

JointState = tuple[MentalState, ...]


@dataclass(frozen=True)
class Decision:
    agent: int
    rule: Optional[int]  # None for continue pseudo-decisions
    action: str
    args: tuple[str, ...]
    substitution: tuple[tuple[str, str], ...]
    kind: str  # "act" | "start" | "continue"

    def call_str(self) -> str:
        return f"{self.action}({','.join(self.args)})" if self.args else self.action


@dataclass(frozen=True)
class Transition:
    source: int
    decision: Optional[Decision]  # None marks a deadlock self-loop
    branches: tuple[tuple[Fraction, int], ...]


@dataclass(frozen=True)
class Bounds:
    max_states: int = 100_000
    max_depth: Optional[int] = None


class BoundExceeded(Exception):
    def __init__(self, bound: str, limit: int, explored: int):
        self.bound = bound
        self.limit = limit
        self.explored = explored
        super().__init__(
            f"{bound} bound of {limit} exceeded after exploring {explored} states"
        )


@dataclass
class TransitionSystem:
    agents: list[str]
    states: list[JointState]
    transitions: list[Transition]
    initial: int = 0
    safe: Optional[list[bool]] = None
    goal: Optional[list[bool]] = None


def initial_state(world: World) -> JointState:
    states = []
    for agent in world.spec.ast.agents:
        ms = MentalState(
            beliefs=world.beliefs_from_atoms(agent.beliefs),
            goals=tuple(world.goal_from_atoms(conj) for conj in agent.goals),
        )
        states.append(world.update_goals(ms))
    return tuple(states)


# -- decision enumeration -----------------------------------------------------


def agent_decisions(world: World, js: JointState, agent_idx: int) -> list[Decision]:
    """Enabled decisions of one agent, in (rule, substitution) order."""
    ms = js[agent_idx]
    if ms.busy is not None:
        return [
            Decision(
                agent=agent_idx,
                rule=None,
                action=ms.busy.action,
                args=ms.busy.args,
                substitution=(),
                kind="continue",
            )
        ]
    decisions: list[Decision] = []
    for rule_idx, dr in enumerate(world.spec.ast.decision_rules):
        action = world.spec.actions_by_name[dr.action]
        for sol in world.eval_msc(ms, dr.condition):
            args = tuple(sol.get(a, a) if is_var(a) else a for a in dr.args)
            params = {pvar: arg for (pvar, _), arg in zip(action.params, args)}
            if not _pre_solutions(world, ms, action, params):
                continue
            decisions.append(
                Decision(
                    agent=agent_idx,
                    rule=rule_idx,
                    action=dr.action,
                    args=args,
                    substitution=tuple(sorted(sol.items())),
                    kind="act" if action.duration == 1 else "start",
                )
            )
    return decisions


def _pre_solutions(world: World, ms: MentalState, action, params: Substitution):
    return world.eval_msc(ms, action.pre, binding=params)


def enabled_decisions(world: World, js: JointState) -> list[Decision]:
    out: list[Decision] = []
    for i in range(len(js)):
        out.extend(agent_decisions(world, js, i))
    return out


def _effect_binding(world: World, ms: MentalState, action, args: tuple[str, ...]) -> dict:
    """Grounding for the action's effects: parameters plus the first
    precondition solution (deterministic order) for any extra variables."""
    params = {pvar: arg for (pvar, _), arg in zip(action.params, args)}
    solutions = _pre_solutions(world, ms, action, params)
    binding = dict(solutions[0]) if solutions else dict(params)
    effect_vars: set[str] = set()
    for outcome in action.outcomes:
        for eff in outcome.effects:
            effect_vars |= eff.atom.variables()
    return {v: binding[v] for v in effect_vars if v in binding} | params


def decision_branch_count(world: World, js: JointState, d: Decision) -> int:
    action = world.spec.actions_by_name[d.action]
    if d.kind == "act":
        return len(action.outcomes)
    if d.kind == "start":
        return 1
    busy = js[d.agent].busy
    if busy is not None and busy.remaining == 1:
        return len(action.outcomes)
    return 1


def decision_branch_weights(world: World, js: JointState, d: Decision) -> list[Fraction]:
    n = decision_branch_count(world, js, d)
    if n == 1:
        return [Fraction(1)]
    return [o.weight for o in world.spec.actions_by_name[d.action].outcomes]


# -- decision application -----------------------------------------------------


def apply_decision(world: World, js: JointState, d: Decision, outcome_idx: int) -> JointState:
    """One transition step: sends fire from the acting agent's current
    state, the action effect (or busy bookkeeping) applies, mailboxes are
    drained by receive rules, and achieved goals are dropped."""
    acting = js[d.agent]
    action = world.spec.actions_by_name[d.action]
    working = list(js)

    # 1. communication out of the acting agent's pre-update state
    outgoing = _fire_send_rules(world, d.agent, acting)
    for recipient, message in outgoing:
        working[recipient] = replace(
            working[recipient], mailbox=working[recipient].mailbox + (message,)
        )

    # 2. the action itself
    acting = working[d.agent]
    if d.kind == "act":
        binding = _effect_binding(world, js[d.agent], action, d.args)
        effects = _ground_effects(action.outcomes[outcome_idx].effects, binding)
        working[d.agent] = world.apply_effects(acting, effects)
    elif d.kind == "start":
        binding = _effect_binding(world, js[d.agent], action, d.args)
        working[d.agent] = replace(
            acting,
            busy=Busy(
                action=d.action,
                args=d.args,
                binding=tuple(sorted(binding.items())),
                remaining=action.duration - 1,
            ),
        )
    else:  # continue
        busy = acting.busy
        if busy is None:
            raise ValueError("continue decision on an idle agent")
        if busy.remaining > 1:
            working[d.agent] = replace(acting, busy=replace(busy, remaining=busy.remaining - 1))
        else:
            binding = dict(busy.binding)
            effects = _ground_effects(action.outcomes[outcome_idx].effects, binding)
            working[d.agent] = world.apply_effects(replace(acting, busy=None), effects)

    # 3. mailbox processing: receive rules in rule order, message order
    for i, ms in enumerate(working):
        if not ms.mailbox:
            continue
        effects: list[Effect] = []
        for rr in world.spec.ast.recv_rules:
            for sender, atom_id in ms.mailbox:
                if rr.sender is not None and rr.sender != sender:
                    continue
                pred, args = world.index.decode(atom_id)
                binding = _match_pattern(rr.pattern, pred, args)
                if binding is None:
                    continue
                effects.append(Effect(rr.op, rr.atom.substitute(binding)))
        ms = replace(ms, mailbox=())
        working[i] = world.apply_effects(ms, effects) if effects else ms

    return tuple(working)


def _fire_send_rules(world: World, agent_idx: int, ms: MentalState):
    """(recipient index, (sender name, atom id)) pairs, in deterministic order."""
    out = []
    sender = world.agent_names[agent_idx]
    for sr in world.spec.ast.send_rules:
        for sol in world.eval_msc(ms, sr.condition):
            atom = sr.atom.substitute(sol)
            atom_id = world.index.id_of_atom(atom)
            if sr.to == "all":
                recipients = [i for i in range(len(world.agent_names)) if i != agent_idx]
            else:
                recipients = [world.agent_names.index(sr.to)]
            for r in recipients:
                out.append((r, (sender, atom_id)))
    return out


def _match_pattern(pattern: Atom, pred: str, args: tuple[str, ...]) -> Optional[dict]:
    if pattern.pred != pred or len(pattern.args) != len(args):
        return None
    binding: dict[str, str] = {}
    for pat, val in zip(pattern.args, args):
        if is_var(pat):
            if binding.setdefault(pat, val) != val:
                return None
        elif pat != val:
            return None
    return binding


def _ground_effects(effects, binding: dict) -> list[Effect]:
    return [Effect(e.op, e.atom.substitute(binding)) for e in effects]


# -- exploration ---------------------------------------------------------------


def generate_ts(world: World, bounds: Bounds = Bounds()) -> TransitionSystem:
    """Deterministic BFS over joint states; duplicate states are merged by
    hash with full-comparison verification (dict semantics). Deadlock
    states get a probability-1 self-loop."""
    init = initial_state(world)
    states: list[JointState] = [init]
    ids: dict[JointState, int] = {init: 0}
    depth = [0]
    transitions: list[Transition] = []
    queue: deque[int] = deque([0])

    if bounds.max_states < 1:
        raise ValueError("max_states must be >= 1")

    while queue:
        sid = queue.popleft()
        js = states[sid]
        decisions = enabled_decisions(world, js)
        if not decisions:
            transitions.append(Transition(sid, None, ((Fraction(1), sid),)))
            continue
        for d in decisions:
            weights = decision_branch_weights(world, js, d)
            branches: list[tuple[Fraction, int]] = []
            seen_targets: dict[int, int] = {}
            for k, weight in enumerate(weights):
                target = apply_decision(world, js, d, k)
                tid = ids.get(target)
                if tid is None:
                    if len(states) + 1 > bounds.max_states:
                        raise BoundExceeded("max_states", bounds.max_states, len(states))
                    new_depth = depth[sid] + 1
                    if bounds.max_depth is not None and new_depth > bounds.max_depth:
                        raise BoundExceeded("max_depth", bounds.max_depth, len(states))
                    tid = len(states)
                    ids[target] = tid
                    states.append(target)
                    depth.append(new_depth)
                    queue.append(tid)
                if tid in seen_targets:
                    i = seen_targets[tid]
                    branches[i] = (branches[i][0] + weight, tid)
                else:
                    seen_targets[tid] = len(branches)
                    branches.append((weight, tid))
            transitions.append(Transition(sid, d, tuple(branches)))

    return TransitionSystem(
        agents=list(world.agent_names), states=states, transitions=transitions
    )


def label_states(world: World, ts: TransitionSystem) -> TransitionSystem:
    """safe: every grounded safety constraint holds in every agent's
    substate property; goal: every agent's goal base is empty."""
    groundings = safety_groundings(world)
    safe: list[bool] = []
    goal: list[bool] = []
    for js in ts.states:
        ok = True
        for ms in js:
            prop = world.substate_property(ms)
            if not _property_satisfies(prop, groundings):
                ok = False
                break
        safe.append(ok)
        goal.append(all(not ms.goals for ms in js))
    ts.safe = safe
    ts.goal = goal
    return ts


def safety_groundings(world: World):
    """Per constraint: [(grounding, ((atom id, negated), ...)), ...].

    Free variables range over their inferred domains; built once per world.
    """
    cached = getattr(world, "_safety_groundings", None)
    if cached is not None:
        return cached
    import itertools

    spec = world.spec
    result = []
    for sc in spec.ast.safety:
        variables: dict[str, str] = {}
        for lit in sc.literals:
            for pos, term in enumerate(lit.atom.args):
                if is_var(term) and term not in variables:
                    variables[term] = spec.signatures[lit.atom.pred][pos]
        names = sorted(variables)
        columns = [sorted(spec.domains[variables[v]]) for v in names]
        instances = []
        for combo in itertools.product(*columns):
            gamma = dict(zip(names, combo))
            lits = tuple(
                (world.index.id_of_atom(lit.atom.substitute(gamma)), lit.negated)
                for lit in sc.literals
            )
            instances.append((gamma, lits))
        result.append(instances)
    world._safety_groundings = result
    return result


def _property_satisfies(prop: Interpretation, groundings) -> bool:
    ids = prop.ids
    for instances in groundings:
        for _gamma, lits in instances:
            for atom_id, negated in lits:
                if negated == (atom_id in ids):
                    break
            else:
                continue
            return False
    return True


# -- serialization ---------------------------------------------------------------


def decision_doc(world: World, d: Optional[Decision]) -> dict:
    if d is None:
        return {"kind": "loop"}
    return {
        "kind": d.kind,
        "agent": world.agent_names[d.agent],
        "rule": d.rule,
        "action": d.action,
        "args": list(d.args),
        "substitution": {v: c for v, c in d.substitution},
    }


def ts_doc(world: World, ts: TransitionSystem) -> dict:
    """Versioned ts.json document; probabilities as exact rational strings."""
    return {
        "version": 1,
        "agents": ts.agents,
        "initial": ts.initial,
        "states": [
            [world.mental_state_doc(ms) for ms in js] for js in ts.states
        ],
        "transitions": [
            {
                "source": t.source,
                "decision": decision_doc(world, t.decision),
                "branches": [
                    {"p": str(p), "target": tid} for p, tid in t.branches
                ],
            }
            for t in ts.transitions
        ],
        "labels": {
            "safe": [i for i, v in enumerate(ts.safe or []) if v],
            "goal": [i for i, v in enumerate(ts.goal or []) if v],
        },
    }


def state_summary(world: World, js: JointState) -> str:
    """One-line human-readable substate summary used in model comments."""
    parts = []
    for name, ms in zip(world.agent_names, js):
        beliefs = ",".join(ms.beliefs.atom_strings(world.index))
        tags = [beliefs or "-"]
        if ms.goals:
            tags.append(f"goals:{len(ms.goals)}")
        if ms.busy is not None:
            tags.append(f"busy:{ms.busy.action}({','.join(ms.busy.args)})x{ms.busy.remaining}")
        parts.append(f"{name}{{{' '.join(tags)}}}")
    return " ".join(parts)
