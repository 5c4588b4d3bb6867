"""Benchmark generation, expert score aggregation, metrics, and baselines."""

from .templates import (
    BenchmarkQuery,
    DEFAULT_VOCAB,
    QUERY_TEMPLATES,
    QueryTemplate,
    TemplateCategory,
    instantiate_benchmark,
)
from .scoring import (
    CRITERIA,
    DEFAULT_WEIGHTS,
    ExpertRating,
    ablated_weights,
    aggregate_expert_score,
    load_ratings,
    recency_score,
)
from .metrics import EvalMetrics, compute_metrics, expert_preferred
from .baselines import (
    SYSTEM_NAMES,
    ComparisonReport,
    render_comparison_table,
    run_baseline,
    run_comparison,
)

__all__ = [
    "BenchmarkQuery",
    "DEFAULT_VOCAB",
    "QUERY_TEMPLATES",
    "QueryTemplate",
    "TemplateCategory",
    "instantiate_benchmark",
    "CRITERIA",
    "DEFAULT_WEIGHTS",
    "ExpertRating",
    "ablated_weights",
    "aggregate_expert_score",
    "load_ratings",
    "recency_score",
    "EvalMetrics",
    "compute_metrics",
    "expert_preferred",
    "SYSTEM_NAMES",
    "ComparisonReport",
    "render_comparison_table",
    "run_baseline",
    "run_comparison",
]
