"""Free-text query interpretation and clarification-answer merging.

A user query becomes a structured constraint object with two mandatory
fields (application, modality) and a tail of optional ones. The wire format
keeps the historical field spelling ``avaliable_data``; ``available_data``
is accepted on input. Sensor and region keep their original scalar-or-list
shape so serialization round-trips byte-for-byte.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .extraction import extract_json_object
from .gateway import GenerationRequest

logger = logging.getLogger(__name__)

MANDATORY_FIELDS = ("application", "modality")

QUERY_FIELDS = (
    "application",
    "modality",
    "sensor",
    "spatial_resolution",
    "temporal_resolution",
    "bands",
    "avaliable_data",
    "deployment_device",
    "priority_metrics",
    "min_performance",
    "region",
    "domain_keywords",
)

_INPUT_ALIASES = {"available_data": "avaliable_data"}

_LIST_FIELDS = ("bands", "priority_metrics", "domain_keywords")
_SCALAR_OR_LIST_FIELDS = ("sensor", "region")


@dataclass
class MinPerformance:
    metric: list
    value: list

    def __post_init__(self):
        if len(self.metric) != len(self.value):
            raise ValueError("min_performance metric and value lists must align")
        for v in self.value:
            if not isinstance(v, (int, float)) or v != v or v in (float("inf"), float("-inf")):
                raise ValueError(f"min_performance value must be a finite number, got {v!r}")

    def to_dict(self) -> dict:
        return {"metric": list(self.metric), "value": list(self.value)}

    def items(self):
        return list(zip(self.metric, self.value))


@dataclass
class StructuredQuery:
    application: Optional[str] = None
    modality: Optional[str] = None
    sensor: Union[str, list, None] = None
    spatial_resolution: Union[str, float, None] = None
    temporal_resolution: Union[str, float, None] = None
    bands: Optional[list] = None
    avaliable_data: Optional[str] = None
    deployment_device: Optional[str] = None
    priority_metrics: Optional[list] = None
    min_performance: Optional[MinPerformance] = None
    region: Union[str, list, None] = None
    domain_keywords: Optional[list] = None

    @classmethod
    def from_dict(cls, data: dict) -> "StructuredQuery":
        query = cls()
        for raw_key, value in data.items():
            key = _INPUT_ALIASES.get(raw_key, raw_key)
            if key not in QUERY_FIELDS or value is None:
                continue
            if key in MANDATORY_FIELDS and isinstance(value, str) and not value.strip():
                continue  # mandatory fields are absent, never empty strings
            if key == "min_performance":
                parsed = _coerce_min_performance(value)
                if parsed is not None:
                    query.min_performance = parsed
                continue
            setattr(query, key, value)
        return query

    def to_dict(self) -> dict:
        out = {}
        for key in QUERY_FIELDS:
            value = getattr(self, key)
            if value is None:
                continue
            out[key] = value.to_dict() if isinstance(value, MinPerformance) else value
        return out

    def copy(self) -> "StructuredQuery":
        return StructuredQuery.from_dict(json.loads(json.dumps(self.to_dict())))

    def sensor_list(self) -> list:
        return _as_list(self.sensor)

    def region_list(self) -> list:
        return _as_list(self.region)

    def set_fields(self) -> list:
        return [k for k in QUERY_FIELDS if getattr(self, k) is not None]

    def unset_fields(self) -> list:
        return [k for k in QUERY_FIELDS if getattr(self, k) is None]

    def mandatory_complete(self) -> bool:
        return not missing_mandatory(self)


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [v for v in value if v]
    return [value]


def _coerce_min_performance(value) -> Optional[MinPerformance]:
    if isinstance(value, MinPerformance):
        return value
    if not isinstance(value, dict):
        return None
    metrics = value.get("metric") or value.get("metrics")
    values = value.get("value") or value.get("values")
    if metrics is None or values is None:
        return None
    if not isinstance(metrics, list):
        metrics = [metrics]
    if not isinstance(values, list):
        values = [values]
    try:
        return MinPerformance(metric=[str(m) for m in metrics],
                              value=[float(v) for v in values])
    except (TypeError, ValueError):
        logger.warning("dropping malformed min_performance: %r", value)
        return None


def missing_mandatory(query: StructuredQuery) -> list:
    missing = []
    for name in MANDATORY_FIELDS:
        value = getattr(query, name)
        if not isinstance(value, str) or not value.strip():
            missing.append(name)
    return missing


PARSE_PROMPT_HEADER = (
    "Turn the user's request for a remote sensing foundation model into a "
    "JSON constraint object. Respond with JSON only. Omit every field the "
    "request does not mention; never invent values.\n"
    "Schema:\n"
    "{\n"
    '  "application": "string",\n'
    '  "modality": "string",\n'
    '  "sensor": "string or list of strings",\n'
    '  "spatial_resolution": "string or numeric",\n'
    '  "temporal_resolution": "string or numeric",\n'
    '  "bands": "list of strings",\n'
    '  "avaliable_data": "string",\n'
    '  "deployment_device": "string",\n'
    '  "priority_metrics": "list of string",\n'
    '  "min_performance": {"metric": "list of string", "value": "list of number"},\n'
    '  "region": "string or list of strings",\n'
    '  "domain_keywords": "list of strings"\n'
    "}\n"
)


def build_parse_prompt(free_text: str) -> str:
    return f"{PARSE_PROMPT_HEADER}\nUser request:\n{free_text}"


def parse_query(free_text: str, provider) -> StructuredQuery:
    """One schema-prompted generation, with a single repair retry.

    A still-unparseable response degrades to the empty query, which forces
    clarification downstream instead of failing the session.
    """
    if not free_text or not free_text.strip():
        raise ValueError("query text must be non-empty")
    prompt = build_parse_prompt(free_text)
    result = provider.generate(GenerationRequest(prompt=prompt, max_output_tokens=512))
    data = extract_json_object(result.text)
    if data is None:
        repair = (
            f"{prompt}\n\nYour previous response was not a valid JSON object. "
            "Respond again with only the JSON object."
        )
        result = provider.generate(GenerationRequest(prompt=repair, max_output_tokens=512))
        data = extract_json_object(result.text)
    if data is None:
        logger.warning("query parse failed twice; degrading to empty constraints")
        return StructuredQuery()
    return StructuredQuery.from_dict(data)


@dataclass
class ClarificationAnswer:
    field_path: str
    raw_text: str


_NUMBER_RE = re.compile(r"^-?\d+(\.\d+)?$")
_MIN_PERF_RE = re.compile(
    r"([A-Za-z][A-Za-z0-9 _\-]*?)\s*(?:>=|≥|=>|at least|above|over|minimum(?: of)?)\s*"
    r"(-?\d+(?:\.\d+)?)\s*%?",
    re.IGNORECASE,
)


def _split_list(text: str) -> list:
    parts = re.split(r"[,;]| and ", text)
    return [p.strip() for p in parts if p.strip()]


def _coerce_answer(field_name: str, text: str):
    """Deterministic scalar coercion of one free-text answer."""
    text = text.strip()
    if not text:
        return None
    if field_name in _LIST_FIELDS:
        return _split_list(text)
    if field_name in _SCALAR_OR_LIST_FIELDS:
        parts = _split_list(text)
        return parts if len(parts) > 1 else parts[0]
    if field_name in ("spatial_resolution", "temporal_resolution"):
        return float(text) if _NUMBER_RE.match(text) else text
    if field_name == "min_performance":
        pairs = _MIN_PERF_RE.findall(text)
        if not pairs:
            return None
        return MinPerformance(metric=[m.strip() for m, _ in pairs],
                              value=[float(v) for _, v in pairs])
    return text


def merge_answers(query: StructuredQuery, answers: list):
    """Fold clarification answers into the query.

    Answer values overwrite prior values for the same field; untouched
    fields are preserved. Returns (new query, skipped field names) where a
    skip is an unknown field or an answer that coerced to nothing.
    """
    merged = query.copy()
    skipped: list[str] = []
    for answer in answers:
        name = _INPUT_ALIASES.get(answer.field_path, answer.field_path)
        if name not in QUERY_FIELDS:
            logger.warning("clarification answer names unknown field %r", answer.field_path)
            skipped.append(answer.field_path)
            continue
        value = _coerce_answer(name, answer.raw_text)
        if value is None:
            skipped.append(name)
            continue
        setattr(merged, name, value)
    return merged, skipped


def render_query_text(query: StructuredQuery) -> str:
    """Tagged text for retrieval, mirroring the document rendering."""
    parts = []
    if query.application:
        parts.append(f"[APPLICATION] {query.application}")
    if query.modality:
        parts.append(f"[MODALITY] {query.modality}")
    for sensor in query.sensor_list():
        parts.append(f"[SENSOR] {sensor}")
    if query.spatial_resolution is not None:
        parts.append(f"[RESOLUTION] {query.spatial_resolution}")
    if query.domain_keywords:
        parts.append(f"[DESCRIPTION] {' '.join(str(k) for k in query.domain_keywords)}")
    return " ".join(parts)
