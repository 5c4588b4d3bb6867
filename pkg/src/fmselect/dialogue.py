"""Clarification question generation and final explanation rendering.

Missing mandatory fields get deterministic template questions (the schema
already names what is absent). Softer triggers ask the generation provider
to propose questions, constrained to fields the user has not set. Final
explanations are generated but their paper/repository links are always
substituted from the catalog, never trusted from the generation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .catalog import Catalog
from .extraction import extract_json_object
from .gateway import GenerationRequest
from .query import QUERY_FIELDS, StructuredQuery, missing_mandatory

logger = logging.getLogger(__name__)

MAX_CLARIFY_ROUNDS = 3
MAX_QUESTIONS_PER_ROUND = 3

# asked in this order when question generation fails
FALLBACK_FIELD_PRIORITY = ("sensor", "avaliable_data", "deployment_device", "min_performance")


class ClarifyTrigger(str, Enum):
    MISSING_MANDATORY = "missing_mandatory"
    TOO_MANY_CANDIDATES = "too_many_candidates"
    LOW_CONFIDENCE = "low_confidence"


MANDATORY_QUESTIONS = {
    "application": "What application or task do you need the model for "
                   "(e.g., flood mapping, land cover classification)?",
    "modality": "Which input data modality will you work with "
                "(e.g., multispectral, SAR, hyperspectral, RGB)?",
}

FALLBACK_QUESTIONS = {
    "sensor": "Which sensor or satellite will your data come from (e.g., Sentinel-1, Sentinel-2)?",
    "avaliable_data": "How much labeled or unlabeled data do you have for this task?",
    "deployment_device": "What hardware will the model run on (e.g., laptop CPU, single GPU, cloud)?",
    "min_performance": "Is there a minimum performance you need (e.g., accuracy at least 85)?",
}


@dataclass
class ClarificationQuestion:
    field_path: str
    question: str

    def to_dict(self) -> dict:
        return {"field_path": self.field_path, "question": self.question}


@dataclass
class ClarificationRequest:
    questions: list
    round_index: int
    trigger: ClarifyTrigger

    def __post_init__(self):
        if not 1 <= len(self.questions) <= MAX_QUESTIONS_PER_ROUND:
            raise ValueError("a clarification round carries between 1 and 3 questions")
        if self.round_index > MAX_CLARIFY_ROUNDS:
            raise ValueError("clarification rounds are capped at 3")

    def to_dict(self) -> dict:
        return {
            "questions": [q.to_dict() for q in self.questions],
            "round_index": self.round_index,
            "trigger": self.trigger.value,
        }


CLARIFY_PROMPT_TEMPLATE = """You help users refine a search for a remote sensing foundation model.

The current structured query is:
{query_json}

Reason for asking: {trigger_hint}

Unset fields you may ask about: {unset_fields}

Propose up to 3 short clarification questions that would best narrow down
the model choice. Ask only about fields from the list above. Respond as a
JSON array of objects with keys "field" and "question"."""

_TRIGGER_HINTS = {
    ClarifyTrigger.TOO_MANY_CANDIDATES: "too many candidate models remain; narrow the search",
    ClarifyTrigger.LOW_CONFIDENCE: "the ranking is low-confidence; tighten the constraints",
}


def _fallback_questions(unset: list) -> list:
    questions = [
        ClarificationQuestion(name, FALLBACK_QUESTIONS[name])
        for name in FALLBACK_FIELD_PRIORITY
        if name in unset
    ]
    if not questions:
        questions = [
            ClarificationQuestion(name, f"Can you tell me more about the {name.replace('_', ' ')}?")
            for name in unset
        ]
    return questions[:MAX_QUESTIONS_PER_ROUND]


def generate_clarifications(query: StructuredQuery, trigger: ClarifyTrigger,
                            round_index: int, provider=None) -> ClarificationRequest:
    """Build one round of questions for the given trigger.

    Never asks about a field that is already set; raises ValueError when the
    round cap is exceeded or nothing is left to ask about.
    """
    if round_index > MAX_CLARIFY_ROUNDS:
        raise ValueError(f"round_index {round_index} exceeds the cap of {MAX_CLARIFY_ROUNDS}")
    if round_index < 1:
        raise ValueError("round_index starts at 1")

    if trigger is ClarifyTrigger.MISSING_MANDATORY:
        missing = missing_mandatory(query)
        if not missing:
            raise ValueError("no mandatory field is missing")
        questions = [ClarificationQuestion(name, MANDATORY_QUESTIONS[name]) for name in missing]
        return ClarificationRequest(questions=questions, round_index=round_index, trigger=trigger)

    unset = query.unset_fields()
    unset = [f for f in unset if f not in ("application", "modality")] or unset
    if not unset:
        raise ValueError("every query field is already set; nothing to clarify")

    questions: Optional[list] = None
    if provider is not None:
        prompt = CLARIFY_PROMPT_TEMPLATE.format(
            query_json=json.dumps(query.to_dict(), indent=2, ensure_ascii=False),
            trigger_hint=_TRIGGER_HINTS[trigger],
            unset_fields=", ".join(unset),
        )
        try:
            result = provider.generate(GenerationRequest(prompt=prompt, max_output_tokens=512))
            questions = _parse_question_output(result.text, unset)
        except Exception:
            logger.warning("clarification generation failed; using fallback questions")
            questions = None
    if not questions:
        questions = _fallback_questions(unset)
    return ClarificationRequest(questions=questions, round_index=round_index, trigger=trigger)


def _parse_question_output(text: str, unset: list) -> Optional[list]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("["), text.rfind("]")
        if start < 0 or end <= start:
            return None
        try:
            data = json.loads(text[start:end + 1])
        except json.JSONDecodeError:
            return None
    if not isinstance(data, list):
        return None
    allowed = set(unset)
    questions = []
    for item in data:
        if not isinstance(item, dict):
            continue
        name = item.get("field") or item.get("field_path")
        question = item.get("question")
        if name in allowed and question:
            questions.append(ClarificationQuestion(str(name), str(question)))
    return questions[:MAX_QUESTIONS_PER_ROUND] or None


@dataclass
class ExplanationEntry:
    model_name: str
    explanation: list
    paper_link: Optional[str]
    repository: Optional[str]

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "explanation": list(self.explanation),
            "paper_link": self.paper_link,
            "repository": self.repository,
        }


EXPLANATION_PROMPT_TEMPLATE = """You are an expert in remote sensing foundation model selection.

The structured user query is:
{query_json}

The final ranked candidate models with their metadata are:
{ranked_block}

Your task:
1. For each model, output a JSON object with:
   - "model_name"
   - "explanation" (several bullet points on why it is recommended)
   - "paper_link"
   - "repository"
2. Highlight how the model satisfies or partially satisfies the query.
3. Mention key trade-offs if relevant (accuracy vs. efficiency, modality coverage, etc.).

Respond with a JSON array only."""


def build_explanation_prompt(query: StructuredQuery, ranked: list, catalog: Catalog) -> str:
    lines = []
    for candidate in ranked:
        record = catalog.get(candidate.model_id)
        summary = record.short_description or "" if record else ""
        lines.append(f"{candidate.rank}. {candidate.model_id}: {summary}")
        for reason in candidate.reasons:
            lines.append(f"   - {reason}")
    return EXPLANATION_PROMPT_TEMPLATE.format(
        query_json=json.dumps(query.to_dict(), indent=2, ensure_ascii=False),
        ranked_block="\n".join(lines),
    )


def generate_explanations(query: StructuredQuery, ranked: list, catalog: Catalog,
                          provider=None) -> list:
    """One explanation entry per ranked candidate, in rank order.

    Links always come verbatim from the catalog record. An unparseable
    generation degrades to entries built from the ranking reasons.
    """
    if not ranked:
        raise ValueError("ranked list must be non-empty")
    records = {}
    for candidate in ranked:
        record = catalog.get(candidate.model_id)
        if record is None:
            raise KeyError(f"model_id not in catalog: {candidate.model_id}")
        records[candidate.model_id] = record

    generated: dict = {}
    if provider is not None:
        prompt = build_explanation_prompt(query, ranked, catalog)
        try:
            result = provider.generate(GenerationRequest(prompt=prompt, max_output_tokens=1024))
            generated = _parse_explanation_output(result.text, records) or {}
        except Exception:
            logger.warning("explanation generation failed; falling back to ranking reasons")
            generated = {}

    entries = []
    for candidate in sorted(ranked, key=lambda c: c.rank):
        record = records[candidate.model_id]
        bullets = generated.get(candidate.model_id) or list(candidate.reasons)
        if not bullets:
            bullets = [f"Ranked #{candidate.rank} for this query"]
        entries.append(ExplanationEntry(
            model_name=record.model_name or candidate.model_id,
            explanation=bullets,
            paper_link=record.paper_link,
            repository=record.repository,
        ))
    return entries


def _parse_explanation_output(text: str, records: dict) -> Optional[dict]:
    data = extract_json_object(text)
    items = None
    if data is not None:
        items = [data]
    else:
        start, end = text.find("["), text.rfind("]")
        if start >= 0 and end > start:
            try:
                items = json.loads(text[start:end + 1])
            except json.JSONDecodeError:
                items = None
    if not isinstance(items, list):
        return None
    from .text import match_key

    by_key = {}
    for model_id, record in records.items():
        by_key[match_key(model_id)] = model_id
        if record.model_name:
            by_key[match_key(record.model_name)] = model_id
    out: dict = {}
    for item in items:
        if not isinstance(item, dict):
            continue
        name = item.get("model_name") or item.get("model")
        if not name:
            continue
        model_id = by_key.get(match_key(str(name)))
        if model_id is None:
            continue
        bullets = item.get("explanation") or []
        if isinstance(bullets, str):
            bullets = [bullets]
        bullets = [str(b) for b in bullets if str(b).strip()]
        if bullets:
            out[model_id] = bullets
    return out or None
