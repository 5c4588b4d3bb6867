"""Candidate refinement: rule-based hard filtering, then in-context ranking.

Hard constraints (modality, sensor support, minimum performance) eliminate
candidates deterministically. Survivors are ordered by prompting the
generation provider with the structured query, compact candidate metadata,
and one worked example; repeated generations vote on the result and feed a
per-selection confidence score reusing the extraction confidence formula.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from .catalog import ModelRecord
from .extraction import ExtractionConfig, field_confidence
from .gateway import GenerationRequest
from .query import StructuredQuery
from .text import key_contains, keys_match, match_key

logger = logging.getLogger(__name__)

DEFAULT_RANK_REPEATS = 3


@dataclass
class RankedCandidate:
    model_id: str
    rank: int
    reasons: list
    selection_confidence: float

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "rank": self.rank,
            "reason": list(self.reasons),
            "selection_confidence": round(self.selection_confidence, 6),
        }


@dataclass
class EliminationEntry:
    model_id: str
    constraint: str
    detail: str


@dataclass
class FilterReport:
    surviving: list
    eliminated: list  # EliminationEntry, possibly several per model

    def eliminated_ids(self) -> set:
        return {e.model_id for e in self.eliminated}

    def to_dict(self) -> dict:
        return {
            "surviving": list(self.surviving),
            "eliminated": [
                {"model_id": e.model_id, "constraint": e.constraint, "detail": e.detail}
                for e in self.eliminated
            ],
        }


def _modality_satisfied(record: ModelRecord, modality: str) -> bool:
    return any(keys_match(modality, m) for m in record.modalities or [])


def _sensor_satisfied(record: ModelRecord, sensors: list) -> bool:
    supported = record.supported_sensors or []
    return any(
        any(keys_match(want, have) for have in supported) for want in sensors
    )


def _performance_benchmarks(record: ModelRecord, application: Optional[str]) -> list:
    """Benchmarks to check a performance floor against.

    Prefer benchmarks whose application matches the query's; when none do,
    any benchmark carrying the metric counts.
    """
    benches = record.benchmarks or []
    if application:
        matching = [
            b for b in benches
            if b.application and key_contains(b.application, application)
        ]
        if matching:
            return matching
    return benches


def _metric_satisfied(record: ModelRecord, application: Optional[str],
                      metric: str, floor: float) -> bool:
    for bench in _performance_benchmarks(record, application):
        metrics = bench.metrics or []
        values = bench.metrics_value or []
        for name, value in zip(metrics, values):
            if keys_match(name, metric) and isinstance(value, (int, float)) and value >= floor:
                return True
    return False


def satisfied_constraints(record: ModelRecord, query: StructuredQuery) -> list:
    """Names of the requested hard constraints this record satisfies.

    Per-metric performance requirements count separately.
    """
    satisfied = []
    if query.modality and _modality_satisfied(record, query.modality):
        satisfied.append("modality")
    sensors = query.sensor_list()
    if sensors and _sensor_satisfied(record, sensors):
        satisfied.append("sensor")
    if query.min_performance:
        for metric, floor in query.min_performance.items():
            if _metric_satisfied(record, query.application, metric, floor):
                satisfied.append(f"min_performance:{metric}")
    return satisfied


def hard_filter(candidates: list, query: StructuredQuery) -> FilterReport:
    """Partition candidates into survivors and eliminations.

    A record survives iff it matches the required modality, supports at
    least one requested sensor (when sensors are given), and meets every
    requested performance floor. Absent constraints are vacuous. The two
    output sets always partition the input.
    """
    surviving: list = []
    eliminated: list = []
    for record in candidates:
        failures: list[EliminationEntry] = []
        if query.modality and not _modality_satisfied(record, query.modality):
            failures.append(EliminationEntry(
                record.model_id, "modality",
                f"requires {query.modality}; record supports "
                f"{', '.join(record.modalities or []) or 'none listed'}",
            ))
        sensors = query.sensor_list()
        if sensors and not _sensor_satisfied(record, sensors):
            failures.append(EliminationEntry(
                record.model_id, "sensor",
                f"none of {sensors} in supported sensors "
                f"{record.supported_sensors or []}",
            ))
        if query.min_performance:
            for metric, floor in query.min_performance.items():
                if not _metric_satisfied(record, query.application, metric, floor):
                    failures.append(EliminationEntry(
                        record.model_id, "min_performance",
                        f"no benchmark reports {metric} >= {floor}",
                    ))
        if failures:
            eliminated.extend(failures)
        else:
            surviving.append(record.model_id)
    report = FilterReport(surviving=surviving, eliminated=eliminated)
    input_ids = {r.model_id for r in candidates}
    assert set(report.surviving) | report.eliminated_ids() == input_ids
    assert not set(report.surviving) & report.eliminated_ids()
    return report


def selection_confidence(top1_votes: list, mean_logprob: float,
                         config: Optional[ExtractionConfig] = None) -> float:
    """Confidence for a selection: modal-vote agreement blended with the
    generator's log-probability, using the extraction confidence formula."""
    if not top1_votes:
        raise ValueError("need at least one vote")
    counts: dict = {}
    for vote in top1_votes:
        counts[vote] = counts.get(vote, 0) + 1
    consistency = max(counts.values()) / len(top1_votes)
    return field_confidence(mean_logprob, consistency, config).confidence


RANKING_PROMPT_TEMPLATE = """You are an expert in remote sensing foundation model selection.

You will be given:
1. A structured user query specifying task requirements and constraints.
2. A list of candidate models retrieved from a database, each with metadata fields.

Your goal:
- Rank the candidate models from most to least suitable for the user's query.
- For each model, provide a brief explanation in several bullet points describing why it is placed at that rank.
- Prioritize hard constraints (application, modality, required sensor, and min_performance if provided), then consider secondary preferences (spatial/temporal resolution, application type, domain keywords, etc.).
- When two models equally satisfy the constraints and preferences, prefer the model that is more efficient, better validated on diverse benchmarks, or more versatile (multimodal, multi-temporal).

[Example]
Structured Query:
{{
  "application": "land cover classification",
  "modality": "multispectral",
  "sensor": ["Sentinel-2"],
  "min_performance": {{
    "metric": ["accuracy"],
    "value": [85]
  }}
}}

Candidate Models:
1. S2MAE
2. Prithvi
3. CACo

Ranking Output:
1. S2MAE
   - Directly supports Sentinel-2 multispectral data
   - Achieves 99.1% accuracy on EuroSAT, exceeding 85% requirement
   - Purpose-built for land cover classification
2. Prithvi
   - Supports multi-temporal multispectral data, including Sentinel-2
   - Accuracy slightly below requirement on similar tasks
   - More generalist FM
3. CACo
   - Only supports RGB modality
   - Accuracy below the 85% requirement
   - Designed mainly for change detection and event retrieval

Your Task:
Given the following new query and candidates, produce a ranked list with explanations.
{memory_block}
Structured Query:
{query_json}

Candidate Models:
{candidates_block}

Please output the ranked list as JSON in the following format:
[
  {{
    "model": <model_name>,
    "rank": <integer>,
    "reason": [<short bullet points>]
  }},
  ...
]"""


def candidate_summary(record: ModelRecord) -> str:
    """Compact metadata projection inlined into the ranking prompt."""
    bits = []
    if record.modalities:
        bits.append("modalities: " + ", ".join(record.modalities))
    if record.supported_sensors:
        bits.append("sensors: " + ", ".join(record.supported_sensors))
    if record.num_parameters:
        bits.append(f"parameters: {record.num_parameters:g}M")
    top_benches = (record.benchmarks or [])[:3]
    for bench in top_benches:
        metrics = bench.metrics or []
        values = bench.metrics_value or []
        pairs = ", ".join(f"{m}={v}" for m, v in zip(metrics, values))
        app = bench.application or bench.application_type or "benchmark"
        bits.append(f"{app} on {bench.dataset or 'n/a'}: {pairs}")
    return "; ".join(bits) if bits else "no metadata"


def build_ranking_prompt(query: StructuredQuery, survivors: list,
                         memory_context: Optional[str] = None) -> str:
    lines = [
        f"{i}. {r.model_name} ({candidate_summary(r)})"
        for i, r in enumerate(survivors, start=1)
    ]
    memory_block = ""
    if memory_context:
        memory_block = f"\nContext from similar past selections:\n{memory_context}\n"
    return RANKING_PROMPT_TEMPLATE.format(
        memory_block=memory_block,
        query_json=json.dumps(query.to_dict(), indent=2, ensure_ascii=False),
        candidates_block="\n".join(lines),
    )


_JSON_ARRAY_RE = re.compile(r"\[.*\]", re.DOTALL)


def parse_ranking_output(text: str, survivors: list) -> Optional[list]:
    """Parse the generated ranking into (model_id, reasons) in rank order.

    Names that do not resolve to a survivor are dropped; ranks compact.
    Returns None when nothing usable parses.
    """
    data = None
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        match = _JSON_ARRAY_RE.search(text)
        if match:
            try:
                data = json.loads(match.group(0))
            except json.JSONDecodeError:
                data = None
    if not isinstance(data, list):
        return None
    by_key: dict = {}
    for record in survivors:
        by_key[match_key(record.model_id)] = record.model_id
        if record.model_name:
            by_key[match_key(record.model_name)] = record.model_id
    entries = []
    for item in data:
        if not isinstance(item, dict) or "model" not in item:
            continue
        model_id = by_key.get(match_key(str(item["model"])))
        if model_id is None:
            continue
        reasons = item.get("reason") or item.get("reasons") or []
        if isinstance(reasons, str):
            reasons = [reasons]
        reasons = [str(r) for r in reasons if str(r).strip()]
        rank = item.get("rank")
        entries.append((rank if isinstance(rank, int) else len(entries) + 1,
                        model_id, reasons))
    entries.sort(key=lambda e: e[0])
    seen = set()
    ordered = []
    for _, model_id, reasons in entries:
        if model_id not in seen:
            seen.add(model_id)
            ordered.append((model_id, reasons))
    return ordered or None


@dataclass
class RankingResult:
    candidates: list  # RankedCandidate, ranks 1..n
    degraded: bool = False
    votes: dict = field(default_factory=dict)  # rank position -> vote list

    def top(self, k: int) -> list:
        return self.candidates[:k]


def icl_rank(query: StructuredQuery, survivors: list, provider,
             memory_context: Optional[str] = None,
             repeats: int = DEFAULT_RANK_REPEATS,
             config: Optional[ExtractionConfig] = None) -> RankingResult:
    """Order survivors by repeated in-context generations.

    The final order comes from the generation whose top pick agrees with the
    majority top pick (ties resolved by generation log-probability). Each
    rank position gets a selection confidence from the votes at that
    position. If every generation is unparseable the input (retrieval) order
    is returned with zero confidence and the result marked degraded.
    """
    if not survivors:
        raise ValueError("need at least one surviving candidate")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    config = config or ExtractionConfig()
    prompt = build_ranking_prompt(query, survivors, memory_context)
    parses = []
    for i in range(repeats):
        result = provider.generate(GenerationRequest(
            prompt=prompt, temperature=0.7, max_output_tokens=1024,
            want_logprobs=True, seed=i,
        ))
        ordered = parse_ranking_output(result.text, survivors)
        if ordered:
            parses.append((ordered, result.mean_token_logprob or 0.0))

    if not parses:
        logger.warning("all %d ranking generations unparseable; using retrieval order", repeats)
        fallback = [
            RankedCandidate(
                model_id=r.model_id, rank=i + 1,
                reasons=["retrieval-order fallback (ranking output unparseable)"],
                selection_confidence=0.0,
            )
            for i, r in enumerate(survivors)
        ]
        return RankingResult(candidates=fallback, degraded=True)

    top1_votes = [ordered[0][0] for ordered, _ in parses]
    counts: dict = {}
    for vote in top1_votes:
        counts[vote] = counts.get(vote, 0) + 1
    modal_top1 = max(counts, key=lambda v: counts[v])
    agreeing = [(ordered, lp) for ordered, lp in parses if ordered[0][0] == modal_top1]
    chosen_order, chosen_logprob = max(agreeing, key=lambda pair: pair[1])

    position_votes: dict = {}
    for position in range(len(chosen_order)):
        position_votes[position + 1] = [
            ordered[position][0] if position < len(ordered) else None
            for ordered, _ in parses
        ]

    candidates = []
    for position, (model_id, reasons) in enumerate(chosen_order, start=1):
        confidence = selection_confidence(
            position_votes[position], min(chosen_logprob, 0.0), config,
        )
        candidates.append(RankedCandidate(
            model_id=model_id, rank=position,
            reasons=reasons or ["ranked by in-context comparison"],
            selection_confidence=confidence,
        ))
    return RankingResult(candidates=candidates, degraded=False, votes=position_votes)
