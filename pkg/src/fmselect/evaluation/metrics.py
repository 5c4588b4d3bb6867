"""Aggregate selection-quality metrics over a benchmark run.

Five complementary views: mean expert score of the top pick, mean score of
the returned set, how often the top pick is the expert-preferred model, how
often the top pick clears the high-quality bar, and the mean reciprocal
rank of the expert-preferred model inside the returned list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scoring import DEFAULT_WEIGHTS, aggregate_expert_score

DEFAULT_HQ_THRESHOLD = 80.0


@dataclass
class EvalMetrics:
    avg_top1: float
    avg_set: float
    top1_hit_rate: float
    hq_hit_rate: float
    mrr: float

    def to_dict(self) -> dict:
        return {
            "avg_top1": round(self.avg_top1, 4),
            "avg_set": round(self.avg_set, 4),
            "top1_hit_rate": round(self.top1_hit_rate, 6),
            "hq_hit_rate": round(self.hq_hit_rate, 6),
            "mrr": round(self.mrr, 6),
        }


def _preferred_set(value) -> set:
    if isinstance(value, (set, frozenset)):
        return set(value)
    if isinstance(value, (list, tuple)):
        return set(value)
    return {value}


def compute_metrics(per_query: dict, preferred: dict,
                    hq_threshold: float = DEFAULT_HQ_THRESHOLD) -> EvalMetrics:
    """Reduce per-query results into the five aggregate metrics.

    ``per_query`` maps query_id to the system's scored selections, ordered
    by rank: a list of (model_id, final_score). ``preferred`` maps query_id
    to the expert-preferred model id (or a set of ids; score ties all count
    as hits). Queries missing from ``preferred`` contribute 0 to the hit
    rate and reciprocal rank.
    """
    if not per_query:
        raise ValueError("need results for at least one query")
    top1_scores, set_scores = [], []
    hits = 0
    hq_hits = 0
    reciprocal_ranks = []
    for query_id, selections in per_query.items():
        if not selections:
            raise ValueError(f"query {query_id} has no scored selections")
        scores = [score for _, score in selections]
        top1_scores.append(scores[0])
        set_scores.append(sum(scores) / len(scores))
        if scores[0] >= hq_threshold:
            hq_hits += 1
        wanted = _preferred_set(preferred.get(query_id, set()))
        if selections[0][0] in wanted:
            hits += 1
        rr = 0.0
        for rank, (model_id, _) in enumerate(selections, start=1):
            if model_id in wanted:
                rr = 1.0 / rank
                break
        reciprocal_ranks.append(rr)
    n = len(per_query)
    # fsum keeps the reduction exactly order-independent across query permutations
    return EvalMetrics(
        avg_top1=math.fsum(top1_scores) / n,
        avg_set=math.fsum(set_scores) / n,
        top1_hit_rate=hits / n,
        hq_hit_rate=hq_hits / n,
        mrr=math.fsum(reciprocal_ranks) / n,
    )


def expert_preferred(ratings: list, weights=DEFAULT_WEIGHTS) -> dict:
    """Per query, the id(s) with the highest final score among every
    candidate rated for that query (across all compared systems)."""
    best: dict = {}
    for rating in ratings:
        score = aggregate_expert_score(rating, weights)
        current = best.setdefault(rating.query_id, {})
        prev = current.get(rating.model_id)
        if prev is None or score > prev:
            current[rating.model_id] = score
    preferred = {}
    for query_id, by_model in best.items():
        top = max(by_model.values())
        preferred[query_id] = {m for m, s in by_model.items() if abs(s - top) < 1e-9}
    return preferred
