"""Request/response models for the verification service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class DiagnosticModel(BaseModel):
    message: str
    severity: str = "error"
    line: int
    col: int
    end_line: int
    end_col: int


class SpecSummary(BaseModel):
    agents: list[str]
    predicates: int
    actions: int
    base_atoms: int
    strata: dict[str, int]


class CheckRequest(BaseModel):
    source: str


class CheckResponse(BaseModel):
    valid: bool
    diagnostics: list[DiagnosticModel] = Field(default_factory=list)
    summary: Optional[SpecSummary] = None


class CompileRequest(BaseModel):
    source: str
    max_states: int = 100_000
    max_depth: Optional[int] = None


class CompileResponse(BaseModel):
    states: int
    transitions: int
    ts: dict[str, Any]
    model: str
    props: str


class OracleRequest(BaseModel):
    source: str
    cap: int = 2000


class OracleResponse(BaseModel):
    states: int
    ts: dict[str, Any]


class RunRequest(BaseModel):
    source: str
    seed: int = 0
    max_steps: int = 10_000
    quiesce: int = 3
    wall_ms: Optional[int] = None
    scenario: list[dict[str, Any]] = Field(default_factory=list)
    conversions: Optional[Any] = None  # decoded conversion table, if any


class RunResponse(BaseModel):
    reports: list[dict[str, Any]]
    actions: list[dict[str, Any]]
    deliveries: list[dict[str, Any]]
    summary: dict[str, Any]
    intervention: bool


class NodeCreateRequest(BaseModel):
    source: str
    seed: int = 0


class NodeCreateResponse(BaseModel):
    node_id: str
    agents: list[str]
    state: dict[str, Any]


class IngestRequest(BaseModel):
    updates: list[dict[str, Any]]


class IngestRejection(BaseModel):
    index: int
    error: str


class IngestResponse(BaseModel):
    accepted: int
    rejected: list[IngestRejection] = Field(default_factory=list)
    queue_length: int


class StepResponse(BaseModel):
    report: dict[str, Any]
    state: dict[str, Any]


class NodeTraceResponse(BaseModel):
    node_id: str
    reports: list[dict[str, Any]]
