"""Expert rating aggregation.

Each (query, model) pair carries seven criterion ratings on a 1-5 scale in
half-point steps. The final score is twenty times the weighted mean, which
puts it on the familiar 100-point scale. Recency is the one criterion with
a fully deterministic rubric (publication year), so it ships as code; the
others are data inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

CRITERIA = (
    "application_compatibility",
    "modality_match",
    "reported_performance",
    "efficiency",
    "popularity",
    "generalizability",
    "recency",
)

DEFAULT_WEIGHTS = (0.25, 0.20, 0.20, 0.15, 0.05, 0.10, 0.05)

SCORE_SCALE = 20.0
WEIGHT_SUM_TOLERANCE = 1e-9


def _validate_scores(scores) -> tuple:
    scores = tuple(float(s) for s in scores)
    if len(scores) != len(CRITERIA):
        raise ValueError(f"expected {len(CRITERIA)} criterion scores, got {len(scores)}")
    for name, score in zip(CRITERIA, scores):
        if not 1.0 <= score <= 5.0:
            raise ValueError(f"{name} score {score} outside [1, 5]")
        if abs(score * 2 - round(score * 2)) > 1e-9:
            raise ValueError(f"{name} score {score} is not a half-point step")
    return scores


def _validate_weights(weights) -> tuple:
    weights = tuple(float(w) for w in weights)
    if len(weights) != len(CRITERIA):
        raise ValueError(f"expected {len(CRITERIA)} weights, got {len(weights)}")
    if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise ValueError(f"weights must sum to 1, got {sum(weights)}")
    return weights


@dataclass
class ExpertRating:
    query_id: str
    model_id: str
    scores: tuple  # aligned with CRITERIA
    system: str = ""

    def __post_init__(self):
        self.scores = _validate_scores(self.scores)


def aggregate_expert_score(rating, weights=DEFAULT_WEIGHTS) -> float:
    """Final 100-point score: 20 x weighted mean of the criterion ratings."""
    scores = rating.scores if isinstance(rating, ExpertRating) else _validate_scores(rating)
    weights = _validate_weights(weights)
    return SCORE_SCALE * sum(w * s for w, s in zip(weights, scores))


def ablated_weights(criterion: str, weights=DEFAULT_WEIGHTS) -> tuple:
    """Zero one criterion's weight and renormalize (sensitivity sweeps)."""
    weights = _validate_weights(weights)
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion: {criterion}")
    index = CRITERIA.index(criterion)
    remaining = sum(w for i, w in enumerate(weights) if i != index)
    return tuple(0.0 if i == index else w / remaining for i, w in enumerate(weights))


def recency_score(year: int) -> float:
    """Publication-year rubric: 2025 and later score 5, one point per year
    back, floored at 1."""
    if year >= 2025:
        return 5.0
    if year <= 2021:
        return 1.0
    return float(year - 2020)


def load_ratings(path) -> list:
    """CSV rows of (query_id, system, model_id, seven criterion scores)."""
    ratings = []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            scores = tuple(float(row[name]) for name in CRITERIA)
            ratings.append(ExpertRating(
                query_id=row["query_id"],
                model_id=row["model_id"],
                scores=scores,
                system=row.get("system", ""),
            ))
    return ratings


def save_ratings(ratings: list, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "system", "model_id", *CRITERIA])
        for r in ratings:
            writer.writerow([r.query_id, r.system, r.model_id, *r.scores])
