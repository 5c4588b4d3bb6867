"""Comparison baselines and the benchmark comparison runner.

Three reference systems bracket the full agent: plain dense retrieval,
single-shot RAG over raw model descriptions, and a naive single-pass agent
(parse, retrieve, rank once; no clarification, memory, confidence gating,
or fallback). All systems run on the identical query set, catalog, and
gateway so a comparison report isolates the orchestration's contribution.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Optional

from ..catalog import Catalog
from ..gateway import GenerationRequest
from ..orchestrator import Orchestrator, OrchestratorConfig, SimulatedUser
from ..query import parse_query, render_query_text
from ..ranking import RankedCandidate, icl_rank
from ..retrieval import VectorIndex, search
from ..text import match_key

logger = logging.getLogger(__name__)

SYSTEM_NAMES = ("agent", "naive_agent", "db_retrieval", "unstructured_rag")

RAG_CONTEXT_SIZE = 10

RAG_PROMPT_TEMPLATE = """You are an expert in remote sensing foundation models.

The user has provided the following task description:
{user_input}

Below is a set of candidate models with their documentation:
{context_str}

Your task:
1. Select and rank the top 3 remote sensing foundation models most suitable for the task.
2. For each selected model, provide:
-- A short explanation of why it fits the task requirements.
-- The reason for its ranking position compared to others.
-- Any other relevant information from the context.
3. Follow this exact output format:

    1. model: <model_name>
    explanation:
    - <reason 1>
    - <reason 2>
    - <reason 3>

    2. model: <model_name>
    explanation:
    - <reason 1>
    - <reason 2>
    - <reason 3>

    3. model: <model_name>
    explanation:
    - <reason 1>
    - <reason 2>
    - <reason 3>"""

_RAG_MODEL_RE = re.compile(r"^\s*\d+\.\s*model:\s*(.+?)\s*$", re.MULTILINE)


def build_rag_prompt(user_input: str, records: list) -> str:
    blocks = []
    for record in records:
        blocks.append(f"### {record.model_name}\n{record.short_description or ''}")
    return RAG_PROMPT_TEMPLATE.format(user_input=user_input, context_str="\n\n".join(blocks))


def parse_rag_output(text: str, catalog: Catalog) -> list:
    """Extract (model_id, reasons) pairs from the fixed numbered format."""
    by_key = {}
    for record in catalog.records:
        by_key[match_key(record.model_id)] = record.model_id
        if record.model_name:
            by_key[match_key(record.model_name)] = record.model_id
    sections = _RAG_MODEL_RE.split(text)
    # split() yields [prefix, name1, body1, name2, body2, ...]
    results = []
    seen = set()
    for i in range(1, len(sections) - 1, 2):
        name, body = sections[i], sections[i + 1]
        model_id = by_key.get(match_key(name))
        if model_id is None or model_id in seen:
            continue
        seen.add(model_id)
        reasons = [
            line.strip().lstrip("-").strip()
            for line in body.splitlines()
            if line.strip().startswith("-")
        ]
        results.append((model_id, [r for r in reasons if r]))
    return results


def run_baseline(name: str, query_text: str, catalog: Catalog, index: VectorIndex,
                 embedder, provider, k: int = 3,
                 config: Optional[OrchestratorConfig] = None) -> list:
    """Run one baseline system on one query; returns up to k RankedCandidates."""
    config = config or OrchestratorConfig()
    if name == "db_retrieval":
        hits = search(index, embedder, query_text, k=k, min_similarity=-1.0)
        return [
            RankedCandidate(
                model_id=hit.key, rank=i + 1,
                reasons=[f"cosine similarity {hit.similarity:.3f}"],
                selection_confidence=min(max(hit.similarity, 0.0), 1.0),
            )
            for i, hit in enumerate(hits)
        ]

    if name == "unstructured_rag":
        hits = search(index, embedder, query_text, k=RAG_CONTEXT_SIZE, min_similarity=-1.0)
        records = [catalog.get(h.key) for h in hits]
        prompt = build_rag_prompt(query_text, records)
        result = provider.generate(GenerationRequest(prompt=prompt, max_output_tokens=1024))
        parsed = parse_rag_output(result.text, catalog)
        if not parsed:
            logger.warning("RAG output unparseable; falling back to retrieval order")
            return [
                RankedCandidate(
                    model_id=hit.key, rank=i + 1,
                    reasons=["retrieval-order fallback (RAG output unparseable)"],
                    selection_confidence=0.0,
                )
                for i, hit in enumerate(hits[:k])
            ]
        return [
            RankedCandidate(
                model_id=model_id, rank=i + 1,
                reasons=reasons or ["selected by RAG generation"],
                selection_confidence=0.0,
            )
            for i, (model_id, reasons) in enumerate(parsed[:k])
        ]

    if name == "naive_agent":
        query = parse_query(query_text, provider)
        text = render_query_text(query) or query_text
        hits = search(index, embedder, text, k=config.retrieval_k,
                      min_similarity=config.retrieval_min_similarity)
        if not hits:
            return []
        records = [catalog.get(h.key) for h in hits]
        result = icl_rank(query, records, provider, repeats=1)
        return result.top(k)

    raise ValueError(f"unknown baseline: {name}")


@dataclass
class ComparisonReport:
    queries: list                      # BenchmarkQuery
    selections: dict = field(default_factory=dict)  # system -> {query_id: [RankedCandidate]}
    statuses: dict = field(default_factory=dict)    # system -> {query_id: status}
    runtime_seconds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "queries": [q.to_dict() for q in self.queries],
            "selections": {
                system: {
                    qid: [c.to_dict() for c in candidates]
                    for qid, candidates in by_query.items()
                }
                for system, by_query in self.selections.items()
            },
            "statuses": self.statuses,
            "runtime_seconds": {k: round(v, 3) for k, v in self.runtime_seconds.items()},
        }


def run_comparison(queries: list, catalog: Catalog, index: VectorIndex, embedder,
                   provider, systems=SYSTEM_NAMES, k: int = 3,
                   config: Optional[OrchestratorConfig] = None,
                   simulated_user: Optional[SimulatedUser] = None) -> ComparisonReport:
    """Run every requested system over the whole query set."""
    config = config or OrchestratorConfig()
    simulated_user = simulated_user or SimulatedUser()
    report = ComparisonReport(queries=list(queries))
    for system in systems:
        by_query: dict = {}
        statuses: dict = {}
        started = time.perf_counter()
        if system == "agent":
            orchestrator = Orchestrator(catalog, index, embedder, provider, config=config)
            for query in queries:
                _, output = orchestrator.one_shot(query.text, k=k,
                                                  simulated_user=simulated_user)
                by_query[query.query_id] = list(output.recommendations)
                statuses[query.query_id] = output.status
        else:
            for query in queries:
                by_query[query.query_id] = run_baseline(
                    system, query.text, catalog, index, embedder, provider,
                    k=k, config=config,
                )
                statuses[query.query_id] = "done"
        report.selections[system] = by_query
        report.statuses[system] = statuses
        report.runtime_seconds[system] = time.perf_counter() - started
    return report


def render_comparison_table(report: ComparisonReport) -> str:
    """Delimited text table: one row per query, one column per system."""
    systems = list(report.selections)
    header = ["query_id"] + systems
    rows = [header]
    for query in report.queries:
        row = [query.query_id]
        for system in systems:
            candidates = report.selections[system].get(query.query_id, [])
            cell = " > ".join(c.model_id for c in candidates) or "-"
            status = report.statuses[system].get(query.query_id, "")
            if status not in ("done", ""):
                cell = f"{cell} [{status}]"
            row.append(cell)
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append(" | ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)))
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    timing = ", ".join(f"{s}: {t:.2f}s" for s, t in report.runtime_seconds.items())
    lines.append("")
    lines.append(f"runtime per system: {timing}")
    return "\n".join(lines)


def save_report(report: ComparisonReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, ensure_ascii=False)
