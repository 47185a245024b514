"""The runtime decision node: ingest sensor updates, make one decision per
step, and commit it only when the tentative successor passes the safety
containment check; unsafe decisions roll back to the current state.

Node values are immutable; one sequential decision loop consumes them. The
ingestion queue is the only concurrency boundary (producers enqueue, the
loop drains at step boundaries).
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .logic import Interpretation, parse_ground_atom
from .mental import MentalState, World
from .syntax import Atom
from .tsgen import (
    Decision,
    JointState,
    agent_decisions,
    apply_decision,
    decision_branch_weights,
    decision_doc,
    initial_state,
    safety_groundings,
)


@dataclass(frozen=True)
class SensorUpdate:
    agent: str
    kind: str  # "belief" | "goal"
    op: str  # "insert" | "delete"
    atom: Atom
    seq: int

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "agent": self.agent,
            "kind": self.kind,
            "op": self.op,
            "atom": str(self.atom),
        }


@dataclass(frozen=True)
class Violation:
    constraint: int
    grounding: tuple[tuple[str, str], ...]
    agent: str

    def to_dict(self) -> dict:
        return {
            "constraint": self.constraint,
            "grounding": {v: c for v, c in self.grounding},
            "agent": self.agent,
        }


@dataclass(frozen=True)
class Verdict:
    safe: bool
    violations: tuple[Violation, ...] = ()

    def to_dict(self) -> dict:
        return {"safe": self.safe, "violations": [v.to_dict() for v in self.violations]}


@dataclass
class StepReport:
    step: int
    agent: Optional[str]
    drained: list[SensorUpdate]
    considered: list[Decision]
    chosen: Optional[Decision]
    outcome: Optional[int]
    verdicts: list[Verdict]
    committed: bool
    safety_ns: int
    state: JointState  # post-step current state

    def to_dict(self, world: World) -> dict:
        return {
            "step": self.step,
            "agent": self.agent,
            "drained": [u.to_dict() for u in self.drained],
            "considered": [decision_doc(world, d) for d in self.considered],
            "chosen": decision_doc(world, self.chosen) if self.chosen else None,
            "outcome": self.outcome,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "committed": self.committed,
            "safety_ns": self.safety_ns,
            "action": self.chosen.call_str() if self.chosen else None,
            "state": [world.mental_state_doc(ms) for ms in self.state],
        }


@dataclass(frozen=True)
class NodeState:
    world: World
    current: JointState
    cursor: int = 0
    steps: int = 0
    queue: tuple[SensorUpdate, ...] = ()
    ingest_seq: int = 0
    rng: random.Random = field(default_factory=random.Random)


class SinkError(Exception):
    """A trace or action sink failed to accept a record."""


def make_node(world: World, seed: int = 0) -> NodeState:
    return NodeState(world=world, current=initial_state(world), rng=random.Random(seed))


def node_doc(node: NodeState) -> dict:
    """Canonical serialization: everything but the rng internals."""
    world = node.world
    return {
        "current": [world.mental_state_doc(ms) for ms in node.current],
        "cursor": node.cursor,
        "steps": node.steps,
        "queue": [u.to_dict() for u in node.queue],
    }


# -- ingestion -----------------------------------------------------------------


def ingest(node: NodeState, record: dict) -> tuple[NodeState, Optional[str]]:
    """Enqueue one sensor update; invalid updates are dropped with a
    diagnostic. Records look like {"agent","kind","op","atom"}."""
    world = node.world
    agent = record.get("agent")
    kind = record.get("kind")
    op = record.get("op")
    raw_atom = record.get("atom")
    if agent not in world.agent_names:
        return node, f"unknown agent {agent!r}"
    if kind not in ("belief", "goal"):
        return node, f"unknown update kind {kind!r}"
    if op not in ("insert", "delete"):
        return node, f"unknown update op {op!r}"
    try:
        atom = raw_atom if isinstance(raw_atom, Atom) else parse_ground_atom(str(raw_atom))
    except ValueError as exc:
        return node, str(exc)
    if not world.index.contains_atom(atom):
        return node, f"unknown atom '{atom}' (not in the ground atom index)"
    update = SensorUpdate(agent, kind, op, atom, seq=node.ingest_seq)
    return (
        replace(node, queue=node.queue + (update,), ingest_seq=node.ingest_seq + 1),
        None,
    )


# -- the safety containment check ------------------------------------------------


def safety_check(world: World, properties: list[Interpretation]) -> Verdict:
    """Every grounding of every constraint must hold in every agent's
    substate property; cost is #constraints x #groundings x #agents,
    independent of how many states the static system would have."""
    violations: list[Violation] = []
    groundings = safety_groundings(world)
    names = world.agent_names
    prop_ids = [p.ids for p in properties]
    for c_idx, instances in enumerate(groundings):
        for gamma, lits in instances:
            for a_idx, ids in enumerate(prop_ids):
                for atom_id, negated in lits:
                    if negated == (atom_id in ids):
                        break
                else:
                    continue
                violations.append(
                    Violation(c_idx, tuple(sorted(gamma.items())), names[a_idx])
                )
    return Verdict(safe=not violations, violations=tuple(violations))


# -- one decision cycle ------------------------------------------------------------


def _apply_updates(world: World, js: JointState, updates: tuple[SensorUpdate, ...]) -> JointState:
    if not updates:
        return js
    working = list(js)
    touched: set[int] = set()
    for u in updates:
        idx = world.agent_names.index(u.agent)
        ms = working[idx]
        atom_id = world.index.id_of_atom(u.atom)
        if u.kind == "belief":
            if u.op == "insert":
                beliefs = Interpretation(ms.beliefs.ids | {atom_id})
            else:
                beliefs = Interpretation(ms.beliefs.ids - {atom_id})
            working[idx] = replace(ms, beliefs=beliefs)
        else:
            conj = frozenset({atom_id})
            if u.op == "insert":
                if conj not in ms.goals:
                    working[idx] = replace(ms, goals=ms.goals + (conj,))
            else:
                working[idx] = replace(
                    ms, goals=tuple(g for g in ms.goals if atom_id not in g)
                )
        touched.add(idx)
    for idx in sorted(touched):
        working[idx] = world.update_goals(working[idx])
    return tuple(working)


def _sample_outcome(rng: random.Random, weights) -> int:
    if len(weights) == 1:
        return 0
    u = rng.random()
    cum = 0.0
    for k, w in enumerate(weights):
        cum += float(w)
        if u < cum:
            return k
    return len(weights) - 1


def step_once(node: NodeState) -> tuple[NodeState, StepReport]:
    """Drain the queue, pick the next agent round-robin among those with
    enabled decisions, and commit its first decision whose tentative
    successor passes the safety check."""
    world = node.world
    step_no = node.steps + 1
    drained = node.queue
    js = _apply_updates(world, node.current, drained)

    n = len(js)
    acting: Optional[int] = None
    decisions: list[Decision] = []
    for offset in range(n):
        idx = (node.cursor + offset) % n
        ds = agent_decisions(world, js, idx)
        if ds:
            acting = idx
            decisions = ds
            break

    verdicts: list[Verdict] = []
    chosen: Optional[Decision] = None
    outcome: Optional[int] = None
    committed = False
    safety_ns = 0
    result = js

    if acting is not None:
        for d in decisions:
            weights = decision_branch_weights(world, js, d)
            k = _sample_outcome(node.rng, weights)
            tentative = apply_decision(world, js, d, k)
            properties = [world.substate_property(ms) for ms in tentative]
            t0 = time.perf_counter_ns()
            verdict = safety_check(world, properties)
            safety_ns += time.perf_counter_ns() - t0
            verdicts.append(verdict)
            if verdict.safe:
                chosen = d
                outcome = k
                committed = True
                result = tentative
                break

    report = StepReport(
        step=step_no,
        agent=world.agent_names[acting] if acting is not None else None,
        drained=list(drained),
        considered=decisions,
        chosen=chosen,
        outcome=outcome,
        verdicts=verdicts,
        committed=committed,
        safety_ns=safety_ns,
        state=result,
    )
    new_node = replace(
        node,
        current=result,
        cursor=(acting + 1) % n if acting is not None else node.cursor,
        steps=step_no,
        queue=(),
    )
    return new_node, report


# -- the loop -------------------------------------------------------------------


@dataclass
class Trace:
    reports: list[StepReport] = field(default_factory=list)
    deliveries: list[dict] = field(default_factory=list)
    reason: str = ""

    def summary(self) -> dict:
        commits = sum(1 for r in self.reports if r.committed)
        rejections = sum(
            1 for r in self.reports if not r.committed and r.verdicts
        )
        violations = sum(len(v.violations) for r in self.reports for v in r.verdicts)
        return {
            "steps": len(self.reports),
            "commits": commits,
            "rejections": rejections,
            "violations": violations,
            "reason": self.reason,
        }

    def had_intervention(self) -> bool:
        """True when some step attempted decisions and all were unsafe."""
        return any(not r.committed and r.verdicts for r in self.reports)


class Feeder:
    """Scheduled update source for run_loop; see sensors.ScenarioFeeder.

    take() returns deliveries due before the given step:
    {"record": original, "update": ground update dict or None, "error": str or None}
    """

    def pending(self) -> bool:
        return False

    def take(self, step: int) -> list[dict]:
        return []


def run_loop(
    node: NodeState,
    *,
    max_steps: int = 10_000,
    quiesce: int = 3,
    wall_ms: Optional[int] = None,
    trace_sink: Optional[Callable[[dict], None]] = None,
    action_sink: Optional[Callable[[dict], None]] = None,
    feeder: Optional[Feeder] = None,
) -> tuple[NodeState, Trace]:
    """Repeat step_once until a limit is hit or the node is quiescent
    (`quiesce` consecutive non-committing steps with nothing drained and
    no pending deliveries)."""
    trace = Trace()
    idle = 0
    started = time.perf_counter()
    while True:
        if node.steps >= max_steps:
            trace.reason = "max_steps"
            break
        if wall_ms is not None and (time.perf_counter() - started) * 1000 >= wall_ms:
            trace.reason = "wall_time"
            break
        step_no = node.steps + 1
        if feeder is not None:
            for delivery in feeder.take(step_no):
                error = delivery.get("error")
                if error is None and delivery.get("update") is not None:
                    node, error = ingest(node, delivery["update"])
                trace.deliveries.append(
                    {"step": step_no, "record": delivery.get("record"), "error": error}
                )
        node, report = step_once(node)
        trace.reports.append(report)
        _emit(trace_sink, report.to_dict(node.world))
        if report.committed and report.chosen is not None:
            _emit(
                action_sink,
                {
                    "step": report.step,
                    "agent": report.agent,
                    "action": report.chosen.call_str(),
                    "outcome": report.outcome,
                },
            )
        if report.committed or report.drained:
            idle = 0
        else:
            idle += 1
        no_more_input = not node.queue and (feeder is None or not feeder.pending())
        if idle >= quiesce and no_more_input:
            trace.reason = "quiescent"
            break
    return node, trace


def _emit(sink, payload: dict) -> None:
    if sink is None:
        return
    try:
        sink(payload)
    except Exception as exc:  # sink failures get a distinct exit condition
        raise SinkError(str(exc)) from exc
