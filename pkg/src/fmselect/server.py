"""HTTP surface over the selection agent.

Sessions live in memory with per-session serialized handling; every state
change goes through the orchestrator's advance, so API snapshots are pure
views. The endpoint set also covers one-shot selection, catalog access,
and a stateless what-if ranking preview for the companion UI.
"""

from __future__ import annotations

import threading
import time
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .config import Stack, build_stack
from .orchestrator import Phase, SessionState, SimulatedUser
from .query import ClarificationAnswer, StructuredQuery, missing_mandatory
from .ranking import hard_filter, icl_rank

_STATUS_BY_PHASE = {
    Phase.AWAITING_ANSWERS: "needs_clarification",
    Phase.DONE: "done",
    Phase.FALLBACK_DONE: "fallback",
}


class SessionRequest(BaseModel):
    query: str
    k: int = Field(default=3, ge=1, le=10)


class AnswerItem(BaseModel):
    field_path: str
    raw_text: str


class AnswersRequest(BaseModel):
    answers: list[AnswerItem]


class SelectRequest(BaseModel):
    query: str
    k: int = Field(default=3, ge=1, le=10)
    auto_answer: str = Field(default="none", pattern="^(none|scripted)$")


class RankPreviewRequest(BaseModel):
    query: dict
    model_ids: list[str]


class _SessionBox:
    def __init__(self, state: SessionState):
        self.state = state
        self.lock = threading.Lock()
        self.created_at = time.time()
        self.updated_at = self.created_at


def _snapshot(box: _SessionBox) -> dict:
    state = box.state
    status = _STATUS_BY_PHASE.get(state.phase, "working")
    questions = []
    if state.pending is not None:
        questions = [q.to_dict() for q in state.pending.questions]
    return {
        "session_id": state.session_id,
        "status": status,
        "phase": state.phase.value,
        "raw_query": state.raw_query,
        "query": state.query.to_dict(),
        "clarify_counter": state.clarify_counter,
        "k": state.k,
        "questions": questions,
        "recommendations": [c.to_dict() for c in state.recommendations],
        "explanations": [e.to_dict() for e in state.explanations],
        "overall_confidence": state.overall_confidence,
        "survivors": list(state.survivors),
        "trace": list(state.trace),
        "flags": list(state.flags),
        "created_at": box.created_at,
        "updated_at": box.updated_at,
    }


def create_app(stack: Optional[Stack] = None) -> FastAPI:
    stack = stack or build_stack()
    app = FastAPI(title="fmselect", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[stack.config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _SessionBox] = {}
    app.state.stack = stack

    def persist_memory() -> None:
        if stack.memory is not None and stack.config.memory_path:
            stack.memory.save(stack.config.memory_path)

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "catalog_size": len(stack.catalog),
            "index_dimension": stack.index.dimension,
        }

    @app.get("/models")
    def list_models():
        return {"models": [r.to_dict() for r in stack.catalog.records]}

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        record = stack.catalog.get(model_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown model: {model_id}")
        return record.to_dict()

    @app.post("/sessions")
    def create_session(body: SessionRequest):
        try:
            state = stack.orchestrator.start_session(body.query, k=body.k)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        box = _SessionBox(state)
        with box.lock:
            box.state, _ = stack.orchestrator.run_until_blocked(box.state)
            box.updated_at = time.time()
        sessions[state.session_id] = box
        persist_memory()
        return _snapshot(box)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        box = sessions.get(session_id)
        if box is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return _snapshot(box)

    @app.post("/sessions/{session_id}/answers")
    def answer_session(session_id: str, body: AnswersRequest):
        box = sessions.get(session_id)
        if box is None:
            raise HTTPException(status_code=404, detail="unknown session")
        answers = [ClarificationAnswer(a.field_path, a.raw_text) for a in body.answers]
        with box.lock:
            if box.state.is_terminal():
                raise HTTPException(status_code=409, detail="session complete")
            if box.state.phase is not Phase.AWAITING_ANSWERS:
                raise HTTPException(status_code=409, detail="session is not awaiting answers")
            box.state, _ = stack.orchestrator.run_until_blocked(box.state, answers)
            box.updated_at = time.time()
        persist_memory()
        return _snapshot(box)

    @app.post("/select")
    def one_shot(body: SelectRequest):
        simulated = SimulatedUser() if body.auto_answer == "scripted" else None
        try:
            state, output = stack.orchestrator.one_shot(body.query, k=body.k,
                                                        simulated_user=simulated)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        persist_memory()
        return {
            "status": output.status,
            "questions": [q.to_dict() for q in output.questions],
            "recommendations": [c.to_dict() for c in output.recommendations],
            "explanations": [e.to_dict() for e in output.explanations],
            "metadata": output.metadata,
            "trace": list(state.trace),
        }

    @app.post("/rank/preview")
    def rank_preview(body: RankPreviewRequest):
        query = StructuredQuery.from_dict(body.query)
        missing = missing_mandatory(query)
        if missing:
            raise HTTPException(
                status_code=422,
                detail=f"query is missing mandatory fields: {', '.join(missing)}",
            )
        records = []
        for model_id in body.model_ids:
            record = stack.catalog.get(model_id)
            if record is None:
                raise HTTPException(status_code=404, detail=f"unknown model: {model_id}")
            records.append(record)
        if not records:
            raise HTTPException(status_code=422, detail="model_ids must be non-empty")
        report = hard_filter(records, query)
        ranking = []
        if report.surviving:
            survivors = [stack.catalog.get(mid) for mid in report.surviving]
            result = icl_rank(query, survivors, stack.provider,
                              repeats=stack.config.rank_repeats,
                              config=stack.orchestrator.extraction_config)
            ranking = [c.to_dict() for c in result.candidates]
        return {"filter": report.to_dict(), "ranking": ranking}

    return app
