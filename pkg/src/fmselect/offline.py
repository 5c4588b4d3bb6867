"""Deterministic keyword-rule generation provider for offline runs.

Recognizes the package's own prompt shapes (query parsing, ranking,
clarification, explanation, RAG) and produces well-formed outputs from
simple vocabulary rules. A pure function of (prompt, seed): no randomness,
no network, which makes CI runs and benchmark comparisons reproducible.
Not a language model; a stand-in wired through the same contract.
"""

from __future__ import annotations

import json
import re
from typing import Optional

from .evaluation.templates import DEFAULT_VOCAB
from .gateway import GenerationRequest, GenerationResult

_RANKING_MARKER = "Please output the ranked list as JSON"
_EXPLANATION_MARKER = "The structured user query is:"
_CLARIFY_MARKER = "Propose up to 3 short clarification questions"
_RAG_MARKER = "Below is a set of candidate models with their documentation:"
_PARSE_MARKER = "User request:"

_CANDIDATE_LINE_RE = re.compile(r"^\s*\d+\.\s+(.+?)(?:\s+\(|$)", re.MULTILINE)
_RAG_HEADING_RE = re.compile(r"^### (.+)$", re.MULTILINE)
_RANKED_LINE_RE = re.compile(r"^\s*\d+\.\s+([^:]+):", re.MULTILINE)
_MIN_PERF_RE = re.compile(
    r"([A-Za-z][A-Za-z0-9 _\-]*?)\s*(?:>=|≥|at least|above|over)\s*(-?\d+(?:\.\d+)?)\s*%?",
    re.IGNORECASE,
)
_RESOLUTION_RE = re.compile(r"\b(\d+(?:\.\d+)?\s*m|sub-meter)\b", re.IGNORECASE)

_DATA_HINTS = (
    ("don’t have any labeled", "no labeled training data"),
    ("don't have any labeled", "no labeled training data"),
    ("few labeled samples", "few-shot labels"),
    ("few-shot labels", "few-shot labels"),
    ("lot of unlabeled", "unlabeled data only"),
    ("well-labeled dataset", "sufficient labeled data"),
)

_DEVICE_HINTS = (
    ("laptop with no gpu", "laptop CPU"),
    ("laptop cpu", "laptop CPU"),
    ("single gpu", "single GPU desktop"),
    ("cloud gpus", "cloud GPU cluster"),
    ("edge device", "edge device"),
    ("drone onboard computer", "drone onboard computer"),
    ("embedded gpu", "embedded GPU"),
)


def _find_term(text: str, terms: list) -> Optional[str]:
    """Longest vocabulary term appearing in the text (word-bounded)."""
    lowered = text.casefold()
    best = None
    for term in terms:
        pattern = r"(?<![a-z0-9])" + re.escape(term.casefold()) + r"(?![a-z0-9])"
        if re.search(pattern, lowered):
            if best is None or len(term) > len(best):
                best = term
    return best


def _find_all_terms(text: str, terms: list) -> list:
    lowered = text.casefold()
    found = []
    for term in terms:
        pattern = r"(?<![a-z0-9])" + re.escape(term.casefold()) + r"(?![a-z0-9])"
        if re.search(pattern, lowered):
            found.append(term)
    return found


class OfflineProvider:
    """Rule-driven generator exposing the standard provider contract."""

    def __init__(self, vocab: Optional[dict] = None, logprob: float = -0.05):
        self.vocab = {**DEFAULT_VOCAB, **(vocab or {})}
        self.logprob = logprob

    def generate(self, request: GenerationRequest) -> GenerationResult:
        prompt = request.prompt
        if _RANKING_MARKER in prompt:
            text = self._rank(prompt)
        elif _EXPLANATION_MARKER in prompt:
            text = self._explain(prompt)
        elif _CLARIFY_MARKER in prompt:
            text = self._clarify(prompt)
        elif _RAG_MARKER in prompt:
            text = self._rag(prompt)
        elif _PARSE_MARKER in prompt:
            text = self._parse(prompt)
        else:
            text = "UNKNOWN"
        return GenerationResult(
            text=text,
            mean_token_logprob=self.logprob if request.want_logprobs else None,
            token_count=len(text.split()),
        )

    def _parse(self, prompt: str) -> str:
        query_text = prompt.rsplit(_PARSE_MARKER, 1)[1].strip()
        out: dict = {}
        application = _find_term(query_text, self.vocab["application"])
        if application:
            out["application"] = application
        modality = _find_term(query_text, self.vocab["modality"])
        if modality:
            out["modality"] = modality
        sensors = _find_all_terms(query_text, self.vocab["sensor"])
        if sensors:
            out["sensor"] = sensors
        regions = _find_all_terms(query_text, self.vocab.get("region", []))
        if regions:
            out["region"] = regions[0] if len(regions) == 1 else regions
        resolution = _RESOLUTION_RE.search(query_text)
        if resolution:
            out["spatial_resolution"] = resolution.group(1)
        perf = _MIN_PERF_RE.findall(query_text)
        if perf:
            out["min_performance"] = {
                "metric": [m.strip() for m, _ in perf],
                "value": [float(v) for _, v in perf],
            }
        lowered = query_text.casefold()
        for needle, value in _DATA_HINTS:
            if needle in lowered:
                out["avaliable_data"] = value
                break
        for needle, value in _DEVICE_HINTS:
            if needle in lowered:
                out["deployment_device"] = value
                break
        return json.dumps(out, ensure_ascii=False)

    def _rank(self, prompt: str) -> str:
        # the worked example also lists candidates; use the final section
        section = prompt.rsplit("Candidate Models:", 1)[1]
        section = section.split("Please output", 1)[0]
        names = _CANDIDATE_LINE_RE.findall(section)
        ranked = [
            {
                "model": name.strip(),
                "rank": i + 1,
                "reason": [
                    "meets the stated hard constraints",
                    "well matched to the requested application",
                ],
            }
            for i, name in enumerate(names)
        ]
        return json.dumps(ranked, ensure_ascii=False)

    def _clarify(self, prompt: str) -> str:
        match = re.search(r"Unset fields you may ask about: (.+)", prompt)
        fields = [f.strip() for f in match.group(1).split(",")] if match else []
        questions = [
            {"field": name, "question": f"Could you tell me about the {name.replace('_', ' ')}?"}
            for name in fields[:3]
        ]
        return json.dumps(questions, ensure_ascii=False)

    def _explain(self, prompt: str) -> str:
        section = prompt.rsplit("The final ranked candidate models with their metadata are:", 1)[1]
        names = _RANKED_LINE_RE.findall(section)
        entries = [
            {
                "model_name": name.strip(),
                "explanation": [
                    "directly supports the requested data modality",
                    "validated on benchmarks close to the target application",
                ],
                # links are intentionally junk: the pipeline must substitute
                # the catalog's own links, never generated ones
                "paper_link": "https://example.invalid/paper",
                "repository": "https://example.invalid/repo",
            }
            for name in dict.fromkeys(n.strip() for n in names)
        ]
        return json.dumps(entries, ensure_ascii=False)

    def _rag(self, prompt: str) -> str:
        names = _RAG_HEADING_RE.findall(prompt)
        lines = []
        for i, name in enumerate(names[:3], start=1):
            lines.append(f"{i}. model: {name}")
            lines.append("explanation:")
            lines.append("- appears closest to the described task")
            lines.append("- documentation covers the requested data type")
            lines.append("")
        return "\n".join(lines)
