"""Session state machine driving the selection workflow.

Each session walks parse -> clarify (as needed) -> retrieve -> filter ->
rank -> explain, with three guarded clarification exits: mandatory fields
missing, too many survivors, or a low-confidence ranking. Clarification is
capped at three rounds per session; when the cap is hit the machine pushes
on with whatever constraints it has rather than fatiguing the user. An
empty filter result degrades to a closest-match recommendation instead of
failing. Completed sessions are appended to a vector task memory that is
recalled by cosine similarity to contextualize future rankings.
"""

from __future__ import annotations

import json
import logging
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .catalog import Catalog
from .dialogue import (
    ClarificationRequest,
    ClarifyTrigger,
    generate_clarifications,
    generate_explanations,
)
from .extraction import ExtractionConfig
from .query import (
    ClarificationAnswer,
    StructuredQuery,
    merge_answers,
    missing_mandatory,
    parse_query,
    render_query_text,
)
from .ranking import RankedCandidate, RankingResult, hard_filter, icl_rank, satisfied_constraints
from .retrieval import VectorIndex, search

logger = logging.getLogger(__name__)

DEFAULT_MAX_CANDIDATES = 15
DEFAULT_CONFIDENCE_THRESHOLD = 0.60
DEFAULT_RESULT_COUNT = 3


class Phase(str, Enum):
    PARSING = "parsing"
    AWAITING_ANSWERS = "awaiting_answers"
    RETRIEVING = "retrieving"
    FILTERING = "filtering"
    RANKING = "ranking"
    EXPLAINING = "explaining"
    DONE = "done"
    FALLBACK_DONE = "fallback_done"


TERMINAL_PHASES = (Phase.DONE, Phase.FALLBACK_DONE)


@dataclass
class OrchestratorConfig:
    retrieval_k: int = 20
    retrieval_min_similarity: float = 0.30
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    rank_repeats: int = 3
    max_clarify: int = 3
    memory_recall: int = 3
    memory_min_similarity: float = 0.35


@dataclass
class SessionState:
    session_id: str
    raw_query: str
    k: int = DEFAULT_RESULT_COUNT
    query: StructuredQuery = field(default_factory=StructuredQuery)
    parsed: bool = False
    clarify_counter: int = 0
    max_clarify: int = 3
    phase: Phase = Phase.PARSING
    trace: list = field(default_factory=lambda: [Phase.PARSING.value])
    candidates: list = field(default_factory=list)      # RetrievalHit
    filter_report: Optional[object] = None
    survivors: list = field(default_factory=list)       # model ids
    ranking: Optional[RankingResult] = None
    overall_confidence: Optional[float] = None
    pending: Optional[ClarificationRequest] = None
    recommendations: list = field(default_factory=list)
    explanations: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def is_terminal(self) -> bool:
        return self.phase in TERMINAL_PHASES


@dataclass
class AgentOutput:
    status: str  # working | needs_clarification | done | fallback | no_match
    questions: list = field(default_factory=list)
    recommendations: list = field(default_factory=list)
    explanations: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


@dataclass
class MemoryEntry:
    vector: np.ndarray
    raw_query: str
    query: dict
    result_ids: list
    timestamp: float

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float32)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValueError("memory vectors must be non-zero")
        # avoid re-dividing an already-unit vector so reloads stay bit-stable
        if abs(norm - 1.0) > 1e-6:
            vec = vec / norm
        self.vector = vec


class MemoryStore:
    """Append-only store of past sessions with cosine recall."""

    def __init__(self):
        self.entries: list[MemoryEntry] = []

    def append(self, entry: MemoryEntry) -> None:
        self.entries.append(entry)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(json.dumps({
                    "vector": [float(x) for x in e.vector],
                    "raw_query": e.raw_query,
                    "query": e.query,
                    "result_ids": e.result_ids,
                    "timestamp": e.timestamp,
                }) + "\n")

    @classmethod
    def load(cls, path) -> "MemoryStore":
        store = cls()
        text = Path(path).read_text(encoding="utf-8")
        for line in text.splitlines():
            if not line.strip():
                continue
            data = json.loads(line)
            store.append(MemoryEntry(
                vector=np.asarray(data["vector"], dtype=np.float32),
                raw_query=data["raw_query"],
                query=data.get("query", {}),
                result_ids=data.get("result_ids", []),
                timestamp=data.get("timestamp", 0.0),
            ))
        return store


def recall_memory(raw_query: str, store: MemoryStore, embedder, m: int = 3,
                  min_similarity: float = 0.35) -> list:
    """Top-m past entries by cosine over embedded raw queries."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not store.entries:
        return []
    query_vec = embedder.embed(raw_query)
    scored = [
        (float(np.dot(query_vec, e.vector)), i, e)
        for i, e in enumerate(store.entries)
    ]
    scored = [s for s in scored if s[0] >= min_similarity]
    scored.sort(key=lambda s: (-s[0], s[1]))
    return [e for _, _, e in scored[:m]]


def memory_context_block(entries: list) -> Optional[str]:
    if not entries:
        return None
    lines = []
    for e in entries:
        chosen = ", ".join(e.result_ids) if e.result_ids else "none"
        lines.append(f'- past query: "{e.raw_query}" -> selected: {chosen}')
    return "\n".join(lines)


def select_closest_model(candidates: list, query: StructuredQuery,
                         catalog: Catalog) -> Optional[str]:
    """Closest-match fallback when filtering empties the candidate set.

    Picks the retrieval hit satisfying the most hard constraints (each
    requested performance metric counts separately); ties go to the higher
    retrieval similarity, then to the lexicographically smaller id.
    """
    if not candidates:
        return None
    scored = []
    for hit in candidates:
        record = catalog.get(hit.key)
        count = len(satisfied_constraints(record, query)) if record else 0
        scored.append((-count, -hit.similarity, hit.key))
    scored.sort()
    return scored[0][2]


class SimulatedUser:
    """Deterministic stand-in for a human answering clarification rounds."""

    DEFAULT_ANSWERS = {
        "application": "land cover classification",
        "modality": "multispectral",
        "sensor": "Sentinel-2",
        "avaliable_data": "a small labeled dataset",
        "deployment_device": "single GPU desktop",
        "min_performance": "accuracy at least 80",
        "spatial_resolution": "10m",
        "temporal_resolution": "monthly",
        "region": "Europe",
        "bands": "RGB, NIR",
        "priority_metrics": "accuracy",
        "domain_keywords": "remote sensing",
    }

    def __init__(self, answers: Optional[dict] = None):
        self.answers = {**self.DEFAULT_ANSWERS, **(answers or {})}

    def answer(self, request: ClarificationRequest) -> list:
        return [
            ClarificationAnswer(q.field_path, self.answers.get(q.field_path, ""))
            for q in request.questions
        ]


class Orchestrator:
    """Executes the control loop over immutable shared components."""

    def __init__(self, catalog: Catalog, index: VectorIndex, embedder, provider,
                 config: Optional[OrchestratorConfig] = None,
                 memory: Optional[MemoryStore] = None,
                 extraction_config: Optional[ExtractionConfig] = None):
        self.catalog = catalog
        self.index = index
        self.embedder = embedder
        self.provider = provider
        self.config = config or OrchestratorConfig()
        self.memory = memory
        self.extraction_config = extraction_config or ExtractionConfig()

    def start_session(self, raw_query: str, k: int = DEFAULT_RESULT_COUNT,
                      session_id: Optional[str] = None) -> SessionState:
        if not raw_query or not raw_query.strip():
            raise ValueError("query text must be non-empty")
        if k < 1:
            raise ValueError("k must be >= 1")
        return SessionState(
            session_id=session_id or uuid.uuid4().hex,
            raw_query=raw_query,
            k=k,
            max_clarify=self.config.max_clarify,
        )

    # -- state machine ----------------------------------------------------

    def advance(self, state: SessionState, answers: Optional[list] = None):
        """Execute exactly one phase step; returns (state, output)."""
        if state.is_terminal():
            raise ValueError("session is complete")
        if state.phase is Phase.AWAITING_ANSWERS:
            if answers is None:
                raise ValueError("answers are required while awaiting clarification")
            return self._absorb_answers(state, answers)
        if answers is not None:
            raise ValueError("answers are only accepted while awaiting clarification")
        handler = {
            Phase.PARSING: self._step_parsing,
            Phase.RETRIEVING: self._step_retrieving,
            Phase.FILTERING: self._step_filtering,
            Phase.RANKING: self._step_ranking,
            Phase.EXPLAINING: self._step_explaining,
        }[state.phase]
        return handler(state)

    def run_until_blocked(self, state: SessionState, answers: Optional[list] = None):
        """Advance until the session awaits answers or terminates."""
        state, output = self.advance(state, answers)
        while output.status == "working":
            state, output = self.advance(state)
        return state, output

    def _enter(self, state: SessionState, phase: Phase) -> None:
        state.phase = phase
        state.trace.append(phase.value)

    def _working(self, state: SessionState) -> AgentOutput:
        return AgentOutput(status="working", metadata={"phase": state.phase.value})

    def _clarify(self, state: SessionState, trigger: ClarifyTrigger) -> Optional[AgentOutput]:
        """Emit a clarification round, or None when there is nothing to ask."""
        try:
            request = generate_clarifications(
                state.query, trigger, state.clarify_counter + 1,
                provider=None if trigger is ClarifyTrigger.MISSING_MANDATORY else self.provider,
            )
        except ValueError:
            logger.info("skipping %s clarification: no askable field", trigger.value)
            return None
        state.clarify_counter += 1
        state.pending = request
        self._enter(state, Phase.AWAITING_ANSWERS)
        return AgentOutput(
            status="needs_clarification",
            questions=request.questions,
            metadata={"trigger": trigger.value, "round_index": request.round_index},
        )

    def _absorb_answers(self, state: SessionState, answers: list):
        merged, skipped = merge_answers(state.query, answers)
        state.query = merged
        state.pending = None
        if skipped:
            state.flags.append(f"skipped_answers:{','.join(skipped)}")
        self._enter(state, Phase.PARSING)
        return state, self._working(state)

    def _step_parsing(self, state: SessionState):
        if not state.parsed:
            state.query = parse_query(state.raw_query, self.provider)
            state.parsed = True
        missing = missing_mandatory(state.query)
        if missing:
            if state.clarify_counter < state.max_clarify:
                output = self._clarify(state, ClarifyTrigger.MISSING_MANDATORY)
                if output is not None:
                    return state, output
            # clarification budget exhausted: push on with what we have
            if "incomplete_query" not in state.flags:
                state.flags.append("incomplete_query")
        self._enter(state, Phase.RETRIEVING)
        return state, self._working(state)

    def _step_retrieving(self, state: SessionState):
        text = render_query_text(state.query) or state.raw_query
        state.candidates = search(
            self.index, self.embedder, text,
            k=self.config.retrieval_k,
            min_similarity=self.config.retrieval_min_similarity,
        )
        self._enter(state, Phase.FILTERING)
        return state, self._working(state)

    def _step_filtering(self, state: SessionState):
        records = [self.catalog.get(hit.key) for hit in state.candidates]
        records = [r for r in records if r is not None]
        report = hard_filter(records, state.query)
        state.filter_report = report
        state.survivors = report.surviving
        if not report.surviving:
            return self._fallback(state)
        if len(report.surviving) > self.config.max_candidates \
                and state.clarify_counter < state.max_clarify:
            output = self._clarify(state, ClarifyTrigger.TOO_MANY_CANDIDATES)
            if output is not None:
                return state, output
        self._enter(state, Phase.RANKING)
        return state, self._working(state)

    def _fallback(self, state: SessionState):
        best = select_closest_model(state.candidates, state.query, self.catalog)
        if best is None:
            self._enter(state, Phase.FALLBACK_DONE)
            return state, AgentOutput(
                status="no_match",
                metadata={"detail": "retrieval returned no viable model"},
            )
        record = self.catalog.get(best)
        satisfied = satisfied_constraints(record, state.query)
        reasons = [
            "closest match: no candidate satisfied every hard constraint",
            f"satisfies: {', '.join(satisfied) if satisfied else 'none of the hard constraints'}",
        ]
        candidate = RankedCandidate(model_id=best, rank=1, reasons=reasons,
                                    selection_confidence=0.0)
        state.recommendations = [candidate]
        state.explanations = generate_explanations(
            state.query, [candidate], self.catalog, self.provider,
        )
        self._enter(state, Phase.FALLBACK_DONE)
        return state, AgentOutput(
            status="fallback",
            recommendations=state.recommendations,
            explanations=state.explanations,
            metadata={"filter": state.filter_report.to_dict()},
        )

    def _step_ranking(self, state: SessionState):
        survivor_records = [self.catalog.get(mid) for mid in state.survivors]
        context = None
        if self.memory is not None:
            entries = recall_memory(
                state.raw_query, self.memory, self.embedder,
                m=self.config.memory_recall,
                min_similarity=self.config.memory_min_similarity,
            )
            context = memory_context_block(entries)
        result = icl_rank(
            state.query, survivor_records, self.provider,
            memory_context=context, repeats=self.config.rank_repeats,
            config=self.extraction_config,
        )
        state.ranking = result
        if result.degraded:
            state.flags.append("ranking_degraded")
        top = result.top(state.k)
        state.overall_confidence = sum(c.selection_confidence for c in top) / len(top)
        if state.overall_confidence < self.config.confidence_threshold \
                and state.clarify_counter < state.max_clarify:
            output = self._clarify(state, ClarifyTrigger.LOW_CONFIDENCE)
            if output is not None:
                return state, output
        self._enter(state, Phase.EXPLAINING)
        return state, self._working(state)

    def _step_explaining(self, state: SessionState):
        top = state.ranking.top(state.k)
        state.recommendations = top
        state.explanations = generate_explanations(
            state.query, top, self.catalog, self.provider,
        )
        if self.memory is not None:
            self.memory.append(MemoryEntry(
                vector=self.embedder.embed(state.raw_query),
                raw_query=state.raw_query,
                query=state.query.to_dict(),
                result_ids=[c.model_id for c in top],
                timestamp=time.time(),
            ))
        self._enter(state, Phase.DONE)
        return state, AgentOutput(
            status="done",
            recommendations=state.recommendations,
            explanations=state.explanations,
            metadata={
                "overall_confidence": state.overall_confidence,
                "flags": list(state.flags),
                "clarify_rounds": state.clarify_counter,
            },
        )

    # -- one-shot convenience ---------------------------------------------

    def one_shot(self, raw_query: str, k: int = DEFAULT_RESULT_COUNT,
                 simulated_user: Optional[SimulatedUser] = None):
        """Run a session to a terminal phase.

        Without a simulated user a clarification need ends the run with
        status needs_clarification and the pending questions.
        """
        state = self.start_session(raw_query, k)
        state, output = self.run_until_blocked(state)
        while output.status == "needs_clarification":
            if simulated_user is None:
                return state, output
            answers = simulated_user.answer(state.pending)
            state, output = self.run_until_blocked(state, answers)
        return state, output
