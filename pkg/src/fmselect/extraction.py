"""Schema-guided catalog population with per-field confidence scoring.

Each source bundle is prompted through the gateway several times; the
independent structured outputs are validated, aggregated per field, and
scored. The confidence of a field combines the generator's own certainty
(sigmoid-normalized mean token log-probability) with agreement across the
iterations (self-consistency). Low-confidence fields are flagged so a human
reviews only those instead of whole records.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .catalog import ModelRecord, RECORD_LIST_FIELDS, RECORD_SCALAR_FIELDS, validate_record
from .gateway import GenerationRequest
from .text import canonical_value

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 5
DEFAULT_TAU = 0.5
DEFAULT_W_LOGPROB = 0.7
DEFAULT_W_CONSISTENCY = 0.3
DEFAULT_REVIEW_THRESHOLD = 0.75


@dataclass
class ExtractionConfig:
    iterations: int = DEFAULT_ITERATIONS
    temperature_tau: float = DEFAULT_TAU
    w_logprob: float = DEFAULT_W_LOGPROB
    w_consistency: float = DEFAULT_W_CONSISTENCY
    review_threshold: float = DEFAULT_REVIEW_THRESHOLD

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if abs(self.w_logprob + self.w_consistency - 1.0) > 1e-9:
            raise ValueError("w_logprob and w_consistency must sum to 1")
        if self.temperature_tau <= 0:
            raise ValueError("temperature_tau must be > 0")
        if not 0.0 <= self.review_threshold <= 1.0:
            raise ValueError("review_threshold must lie in [0, 1]")


@dataclass
class ConfidenceScore:
    normalized_logprob: float
    confidence: float
    flagged: bool


@dataclass
class FieldConfidence:
    field_path: str
    candidates: list  # (value, count) sorted by count desc
    chosen_value: object
    mean_logprob: Optional[float]
    self_consistency: float
    normalized_logprob: float
    confidence: float
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "field_path": self.field_path,
            "candidates": [{"value": v, "count": c} for v, c in self.candidates],
            "chosen_value": self.chosen_value,
            "mean_logprob": self.mean_logprob,
            "self_consistency": round(self.self_consistency, 6),
            "normalized_logprob": round(self.normalized_logprob, 6),
            "confidence": round(self.confidence, 6),
            "flagged": self.flagged,
        }


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def normalized_logprob(mean_logprob: float, tau: float) -> float:
    """Map a mean token log-probability (<= 0) into [0, 1].

    A plain sigmoid of L/tau saturates at 0.5 for non-positive inputs, so the
    value is doubled: certainty (L = 0) maps to exactly 1 while the sigmoid
    shape and temperature sensitivity are preserved.
    """
    return min(max(2.0 * sigmoid(mean_logprob / tau), 0.0), 1.0)


def field_confidence(mean_logprob: float, self_consistency: float,
                     config: Optional[ExtractionConfig] = None) -> ConfidenceScore:
    """Combined confidence for one extracted field value."""
    config = config or ExtractionConfig()
    if mean_logprob > 0:
        raise ValueError("mean_logprob must be <= 0")
    if not 0.0 <= self_consistency <= 1.0:
        raise ValueError("self_consistency must lie in [0, 1]")
    norm = normalized_logprob(mean_logprob, config.temperature_tau)
    confidence = config.w_logprob * norm + config.w_consistency * self_consistency
    return ConfidenceScore(
        normalized_logprob=norm,
        confidence=confidence,
        flagged=confidence < config.review_threshold,
    )


def aggregate_iterations(values: list, logprobs: Optional[list] = None,
                         total: Optional[int] = None):
    """Pick the modal value among iterations and its agreement fraction.

    Equality is canonical-form equality (trimmed/case-folded strings,
    order-insensitive lists). Ties go to the value whose iterations carry the
    highest mean log-probability, falling back to first appearance. ``total``
    overrides the denominator when some iterations never produced the field.
    """
    if not values:
        raise ValueError("need at least one value")
    if logprobs is not None and len(logprobs) != len(values):
        raise ValueError("logprobs must align with values")
    groups: dict = {}
    order: list = []
    for i, value in enumerate(values):
        key = canonical_value(value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(i)

    def group_logprob(key) -> float:
        if logprobs is None:
            return 0.0
        entries = [logprobs[i] for i in groups[key] if logprobs[i] is not None]
        return sum(entries) / len(entries) if entries else -math.inf

    best_key = max(
        order,
        key=lambda k: (len(groups[k]), group_logprob(k), -order.index(k)),
    )
    indices = groups[best_key]
    if logprobs is not None:
        rep = max(indices, key=lambda i: logprobs[i] if logprobs[i] is not None else -math.inf)
    else:
        rep = indices[0]
    denominator = total if total is not None else len(values)
    return values[rep], len(indices) / denominator


_JSON_OBJECT_RE = re.compile(r"\{.*\}", re.DOTALL)


def extract_json_object(text: str) -> Optional[dict]:
    """Best-effort parse of one JSON object out of generated text."""
    try:
        data = json.loads(text)
        return data if isinstance(data, dict) else None
    except json.JSONDecodeError:
        pass
    match = _JSON_OBJECT_RE.search(text)
    if not match:
        return None
    try:
        data = json.loads(match.group(0))
        return data if isinstance(data, dict) else None
    except json.JSONDecodeError:
        return None


_NESTED_FIELDS = ("pretraining_phases", "benchmarks")


def flatten_record_dict(data: dict) -> dict:
    """Field-path view of a record document.

    Scalars and lists of scalars are single values; entries of the two
    nested structures get indexed paths like ``benchmarks[0].dataset``.
    Keys outside the schema are dropped.
    """
    known = set(RECORD_SCALAR_FIELDS) | set(RECORD_LIST_FIELDS)
    flat = {}
    for key, value in data.items():
        if value is None:
            continue
        if key in _NESTED_FIELDS and isinstance(value, list):
            for i, item in enumerate(value):
                if not isinstance(item, dict):
                    continue
                for sub_key, sub_value in item.items():
                    if sub_value is not None:
                        flat[f"{key}[{i}].{sub_key}"] = sub_value
        elif key in known:
            flat[key] = value
    return flat


_PATH_RE = re.compile(r"^(\w+)\[(\d+)\]\.(\w+)$")


def unflatten_to_dict(flat: dict) -> dict:
    out: dict = {}
    nested: dict = {}
    for path, value in flat.items():
        match = _PATH_RE.match(path)
        if match:
            group, index, sub_key = match.group(1), int(match.group(2)), match.group(3)
            nested.setdefault(group, {}).setdefault(index, {})[sub_key] = value
        else:
            out[path] = value
    for group, items in nested.items():
        out[group] = [items[i] for i in sorted(items)]
    return out


SCHEMA_PROMPT_HEADER = (
    "Extract one JSON record describing the remote sensing foundation model "
    "discussed in the sources below. Respond with a single JSON object and "
    "nothing else. Use exactly these field names, omitting any the sources "
    "do not state (never guess):\n"
)


def build_extraction_prompt(sources: list) -> str:
    fields = ", ".join(RECORD_SCALAR_FIELDS + RECORD_LIST_FIELDS)
    parts = [
        SCHEMA_PROMPT_HEADER,
        f"Top-level fields: {fields}.",
        "Nested lists: pretraining_phases (dataset, regions_coverage, time_range, "
        "num_images, token_size, image_resolution, epochs, batch_size, learning_rate, "
        "augmentations, processing, sampling, processing_level, cloud_cover, "
        "missing_data, masking_ratio) and benchmarks (application_type, application, "
        "dataset, metrics, metrics_value, sensor, regions, original_samples, "
        "num_samples, sampling_percentage, num_classes, classes, image_resolution, "
        "spatial_resolution, bands_used, augmentations, optimizer, batch_size, "
        "learning_rate, epochs, loss_function, split_ratio).",
        "",
    ]
    for i, source in enumerate(sources, start=1):
        parts.append(f"--- Source {i} ---")
        parts.append(source)
    return "\n".join(parts)


def _validated_flat(data: dict) -> tuple[dict, set]:
    """Flatten one iteration's output, dropping schema-invalid field values.

    Returns the surviving path->value map plus the set of paths that were
    attempted but rejected.
    """
    flat = flatten_record_dict(data)
    record = ModelRecord.from_dict(unflatten_to_dict(flat))
    rejected = set()
    for violation in validate_record(record):
        if violation.field_path in flat:
            rejected.add(violation.field_path)
    # identity rules fire for absent fields too; only drop real values
    surviving = {p: v for p, v in flat.items() if p not in rejected}
    return surviving, rejected


def run_extraction(sources: list, config: ExtractionConfig, provider,
                   max_output_tokens: int = 2048):
    """Populate one record from unstructured sources.

    Issues ``config.iterations`` independent generations, validates each,
    aggregates per field, and returns the assembled record together with
    every field's confidence entry (flagged entries are the review queue).
    """
    if not sources:
        raise ValueError("at least one source document is required")
    prompt = build_extraction_prompt(list(sources))
    n = config.iterations
    observed: dict[str, list] = {}
    attempted: set[str] = set()
    iteration_logprobs: list[Optional[float]] = []
    for i in range(n):
        result = provider.generate(GenerationRequest(
            prompt=prompt,
            temperature=1.0,
            max_output_tokens=max_output_tokens,
            want_logprobs=True,
            seed=i,
        ))
        iteration_logprobs.append(result.mean_token_logprob)
        data = extract_json_object(result.text)
        if data is None:
            logger.debug("iteration %d produced unparseable output", i)
            continue
        flat, rejected = _validated_flat(data)
        attempted.update(rejected)
        for path, value in flat.items():
            observed.setdefault(path, []).append((i, value))

    confidences: list[FieldConfidence] = []
    chosen_flat: dict = {}
    for path in sorted(observed):
        pairs = observed[path]
        values = [v for _, v in pairs]
        logprobs = [iteration_logprobs[i] for i, _ in pairs]
        chosen, consistency = aggregate_iterations(values, logprobs, total=n)
        counts: dict = {}
        reps: dict = {}
        for value in values:
            key = canonical_value(value)
            counts[key] = counts.get(key, 0) + 1
            reps.setdefault(key, value)
        candidates = sorted(
            ((reps[k], c) for k, c in counts.items()),
            key=lambda vc: -vc[1],
        )
        modal_key = canonical_value(chosen)
        modal_logprobs = [
            lp for (i, v), lp in zip(pairs, logprobs)
            if canonical_value(v) == modal_key and lp is not None
        ]
        mean_lp = sum(modal_logprobs) / len(modal_logprobs) if modal_logprobs else None
        if mean_lp is not None:
            score = field_confidence(mean_lp, consistency, config)
        else:
            # provider reported no log-probabilities: no certainty signal
            conf = config.w_consistency * consistency
            score = ConfidenceScore(
                normalized_logprob=0.0,
                confidence=conf,
                flagged=conf < config.review_threshold,
            )
        confidences.append(FieldConfidence(
            field_path=path,
            candidates=candidates,
            chosen_value=chosen,
            mean_logprob=mean_lp,
            self_consistency=consistency,
            normalized_logprob=score.normalized_logprob,
            confidence=score.confidence,
            flagged=score.flagged,
        ))
        chosen_flat[path] = chosen

    # fields whose value was rejected in every iteration stay absent but flagged
    for path in sorted(attempted - set(observed)):
        confidences.append(FieldConfidence(
            field_path=path,
            candidates=[],
            chosen_value=None,
            mean_logprob=None,
            self_consistency=0.0,
            normalized_logprob=0.0,
            confidence=0.0,
            flagged=True,
        ))

    record = ModelRecord.from_dict(unflatten_to_dict(chosen_flat))
    return record, confidences


def review_line(record: ModelRecord, confidences: list) -> str:
    """One JSON line for the sidecar review file: flagged fields only."""
    flagged = [fc.to_dict() for fc in confidences if fc.flagged]
    return json.dumps(
        {"model_id": record.model_id, "flagged_fields": flagged},
        ensure_ascii=False,
    )
