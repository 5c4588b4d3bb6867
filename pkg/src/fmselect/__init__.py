"""Constraint-aware selection agent for remote sensing foundation models."""

__version__ = "0.1.0"

from .catalog import (
    Catalog,
    ModelRecord,
    load_catalog,
    render_retrieval_text,
    validate_record,
)
from .extraction import ExtractionConfig, FieldConfidence, field_confidence, run_extraction
from .gateway import GenerationRequest, GenerationResult, HashingEmbedder, ScriptedProvider
from .orchestrator import Orchestrator, OrchestratorConfig, Phase, SessionState, SimulatedUser
from .query import StructuredQuery, merge_answers, missing_mandatory, parse_query
from .ranking import FilterReport, RankedCandidate, hard_filter, icl_rank
from .retrieval import VectorIndex, build_index, search

__all__ = [
    "Catalog",
    "ModelRecord",
    "load_catalog",
    "render_retrieval_text",
    "validate_record",
    "ExtractionConfig",
    "FieldConfidence",
    "field_confidence",
    "run_extraction",
    "GenerationRequest",
    "GenerationResult",
    "HashingEmbedder",
    "ScriptedProvider",
    "Orchestrator",
    "OrchestratorConfig",
    "Phase",
    "SessionState",
    "SimulatedUser",
    "StructuredQuery",
    "merge_answers",
    "missing_mandatory",
    "parse_query",
    "FilterReport",
    "RankedCandidate",
    "hard_filter",
    "icl_rank",
    "VectorIndex",
    "build_index",
    "search",
]
