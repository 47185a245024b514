"""FastAPI service wrapping the verification toolchain.

Stateless endpoints cover check/compile/oracle/run; node sessions expose
the long-running decision node so sensor producers can POST updates while
one sequential loop steps it (per-session lock).
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException

from ..diagnostics import SpecError
from ..logic import CapacityError
from ..mental import World
from ..oracle import OracleCapExceeded, oracle_ts_doc
from ..prism import encode_prism
from ..runtime import NodeState, StepReport, ingest, make_node, run_loop, step_once, node_doc
from ..sensors import ScenarioFeeder, load_conversion_rules
from ..stratify import CycleError
from ..tsgen import Bounds, BoundExceeded, generate_ts, label_states, ts_doc
from ..validate import ValidatedSpec, load_spec
from .schemas import (
    CheckRequest,
    CheckResponse,
    CompileRequest,
    CompileResponse,
    IngestRejection,
    IngestRequest,
    IngestResponse,
    NodeCreateRequest,
    NodeCreateResponse,
    NodeTraceResponse,
    OracleRequest,
    OracleResponse,
    RunRequest,
    RunResponse,
    SpecSummary,
    StepResponse,
)

app = FastAPI(
    title="masv",
    description="Multi-agent decision specs: static verification artifacts "
    "and a runtime safety-checked decision node.",
)


@dataclass
class NodeSession:
    world: World
    node: NodeState
    lock: threading.Lock = field(default_factory=threading.Lock)
    reports: list[StepReport] = field(default_factory=list)


_sessions: dict[str, NodeSession] = {}
_sessions_lock = threading.Lock()


def _load(source: str) -> ValidatedSpec:
    try:
        return load_spec(source)
    except SpecError as exc:
        raise HTTPException(
            status_code=422,
            detail={
                "kind": "invalid-spec",
                "diagnostics": [d.to_dict() for d in exc.diagnostics],
            },
        )
    except CycleError as exc:
        raise HTTPException(
            status_code=422,
            detail={
                "kind": "invalid-spec",
                "diagnostics": [
                    {"message": str(exc), "severity": "error", "line": 1, "col": 1,
                     "end_line": 1, "end_col": 2}
                ],
            },
        )


def _world(source: str) -> World:
    spec = _load(source)
    try:
        return World(spec)
    except CapacityError as exc:
        raise HTTPException(
            status_code=409,
            detail={"kind": "bound-exceeded", "bound": "atom-capacity",
                    "limit": exc.limit, "explored": exc.needed},
        )


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/check", response_model=CheckResponse)
def check(req: CheckRequest) -> CheckResponse:
    try:
        spec = load_spec(req.source)
    except SpecError as exc:
        return CheckResponse(
            valid=False,
            diagnostics=[d.to_dict() for d in exc.diagnostics],
        )
    except CycleError as exc:
        return CheckResponse(
            valid=False,
            diagnostics=[
                {"message": str(exc), "severity": "error", "line": 1, "col": 1,
                 "end_line": 1, "end_col": 2}
            ],
        )
    world = World(spec)
    return CheckResponse(
        valid=True,
        summary=SpecSummary(
            agents=spec.agent_names,
            predicates=len(spec.predicates),
            actions=len(spec.ast.actions),
            base_atoms=len(world.index),
            strata=spec.strata,
        ),
    )


@app.post("/compile", response_model=CompileResponse)
def compile_spec(req: CompileRequest) -> CompileResponse:
    world = _world(req.source)
    try:
        ts = generate_ts(world, Bounds(max_states=req.max_states, max_depth=req.max_depth))
    except BoundExceeded as exc:
        raise HTTPException(
            status_code=409,
            detail={"kind": "bound-exceeded", "bound": exc.bound,
                    "limit": exc.limit, "explored": exc.explored},
        )
    ts = label_states(world, ts)
    artifacts = encode_prism(world, ts)
    return CompileResponse(
        states=len(ts.states),
        transitions=len(ts.transitions),
        ts=ts_doc(world, ts),
        model=artifacts.model_text,
        props=artifacts.properties_text,
    )


@app.post("/oracle", response_model=OracleResponse)
def oracle(req: OracleRequest) -> OracleResponse:
    spec = _load(req.source)
    try:
        doc = oracle_ts_doc(spec, cap=req.cap)
    except OracleCapExceeded as exc:
        raise HTTPException(
            status_code=409,
            detail={"kind": "bound-exceeded", "bound": "oracle-cap",
                    "limit": exc.cap, "explored": exc.cap},
        )
    return OracleResponse(states=len(doc["states"]), ts=doc)


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    world = _world(req.source)
    rules = None
    if req.conversions is not None:
        try:
            rules = load_conversion_rules(req.conversions)
        except ValueError as exc:
            raise HTTPException(
                status_code=422, detail={"kind": "bad-conversions", "error": str(exc)}
            )
    try:
        feeder = ScenarioFeeder(req.scenario, rules)
    except ValueError as exc:
        raise HTTPException(
            status_code=422, detail={"kind": "bad-scenario", "error": str(exc)}
        )
    node = make_node(world, req.seed)
    reports: list[dict] = []
    actions: list[dict] = []
    node, trace = run_loop(
        node,
        max_steps=req.max_steps,
        quiesce=req.quiesce,
        wall_ms=req.wall_ms,
        trace_sink=reports.append,
        action_sink=actions.append,
        feeder=feeder,
    )
    return RunResponse(
        reports=reports,
        actions=actions,
        deliveries=trace.deliveries,
        summary=trace.summary(),
        intervention=trace.had_intervention(),
    )


# -- node sessions ---------------------------------------------------------------


def _session(node_id: str) -> NodeSession:
    with _sessions_lock:
        session = _sessions.get(node_id)
    if session is None:
        raise HTTPException(status_code=404, detail={"kind": "unknown-node"})
    return session


@app.post("/nodes", response_model=NodeCreateResponse)
def create_node(req: NodeCreateRequest) -> NodeCreateResponse:
    world = _world(req.source)
    session = NodeSession(world=world, node=make_node(world, req.seed))
    node_id = uuid.uuid4().hex
    with _sessions_lock:
        _sessions[node_id] = session
    return NodeCreateResponse(
        node_id=node_id,
        agents=world.agent_names,
        state=node_doc(session.node),
    )


@app.post("/nodes/{node_id}/ingest", response_model=IngestResponse)
def node_ingest(node_id: str, req: IngestRequest) -> IngestResponse:
    session = _session(node_id)
    rejected: list[IngestRejection] = []
    accepted = 0
    with session.lock:  # arrival order is assigned under the queue lock
        for i, record in enumerate(req.updates):
            session.node, error = ingest(session.node, record)
            if error is None:
                accepted += 1
            else:
                rejected.append(IngestRejection(index=i, error=error))
        queue_length = len(session.node.queue)
    return IngestResponse(accepted=accepted, rejected=rejected, queue_length=queue_length)


@app.post("/nodes/{node_id}/step", response_model=StepResponse)
def node_step(node_id: str) -> StepResponse:
    session = _session(node_id)
    with session.lock:  # one sequential decision loop per node
        session.node, report = step_once(session.node)
        session.reports.append(report)
        return StepResponse(
            report=report.to_dict(session.world), state=node_doc(session.node)
        )


@app.get("/nodes/{node_id}/state")
def node_state(node_id: str) -> dict:
    session = _session(node_id)
    with session.lock:
        return node_doc(session.node)


@app.get("/nodes/{node_id}/trace", response_model=NodeTraceResponse)
def node_trace(node_id: str) -> NodeTraceResponse:
    session = _session(node_id)
    with session.lock:
        return NodeTraceResponse(
            node_id=node_id,
            reports=[r.to_dict(session.world) for r in session.reports],
        )


@app.delete("/nodes/{node_id}")
def delete_node(node_id: str) -> dict:
    with _sessions_lock:
        if _sessions.pop(node_id, None) is None:
            raise HTTPException(status_code=404, detail={"kind": "unknown-node"})
    return {"deleted": node_id}
