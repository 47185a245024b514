"""masv: static and runtime verification for multi-agent decision specs."""

from .diagnostics import Diagnostic, SpecError
from .logic import AtomIndex, Interpretation, holds, minimal_model, query
from .mental import MentalState, World
from .parser import ParseDiagnostics, parse_spec
from .prism import check_prism_syntax, encode_prism, encode_properties
from .runtime import NodeState, ingest, make_node, run_loop, safety_check, step_once
from .sensors import data_processing, run_scenario
from .stratify import CycleError, check_stratification
from .tsgen import Bounds, TransitionSystem, generate_ts, label_states
from .validate import ValidatedSpec, check_well_formed, load_spec

__version__ = "0.1.0"

__all__ = [
    "AtomIndex",
    "Bounds",
    "CycleError",
    "Diagnostic",
    "Interpretation",
    "MentalState",
    "NodeState",
    "ParseDiagnostics",
    "SpecError",
    "TransitionSystem",
    "ValidatedSpec",
    "World",
    "check_prism_syntax",
    "check_stratification",
    "check_well_formed",
    "data_processing",
    "encode_prism",
    "encode_properties",
    "generate_ts",
    "holds",
    "ingest",
    "label_states",
    "load_spec",
    "make_node",
    "minimal_model",
    "parse_spec",
    "query",
    "run_loop",
    "run_scenario",
    "safety_check",
    "step_once",
]
