"""Foundation model metadata catalog: load, validate, persist, render.

The catalog persists as UTF-8 line-delimited JSON, one record per line.
Records follow a fixed schema with two nested structures (pretraining phases
and benchmark entries). Only ``model_id`` and ``model_name`` are mandatory;
real model documentation is sparse and every other field may be absent.
Unknown keys are preserved verbatim on round-trip but ignored by all logic.

Validation never raises on structurally well-formed documents: problems are
returned as :class:`Violation` values so a partially broken catalog file
still loads every record that passes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Optional

logger = logging.getLogger(__name__)

ALIGNMENT_VALUES = ("full", "partial", "none")

RECORD_SCALAR_FIELDS = (
    "model_id",
    "model_name",
    "version",
    "release_date",
    "last_updated",
    "short_description",
    "paper_link",
    "citations",
    "repository",
    "weights",
    "backbone",
    "num_layers",
    "num_parameters",
    "pretext_training_type",
    "masking_strategy",
    "pretraining",
    "modality_integration_type",
    "spectral_alignment",
    "temporal_alignment",
    "spatial_resolution",
    "temporal_resolution",
)

RECORD_LIST_FIELDS = (
    "domain_knowledge",
    "backbone_modifications",
    "supported_sensors",
    "modalities",
    "bands",
)

PHASE_FIELDS = (
    "dataset",
    "regions_coverage",
    "time_range",
    "num_images",
    "token_size",
    "image_resolution",
    "epochs",
    "batch_size",
    "learning_rate",
    "augmentations",
    "processing",
    "sampling",
    "processing_level",
    "cloud_cover",
    "missing_data",
    "masking_ratio",
)

BENCHMARK_FIELDS = (
    "application_type",
    "application",
    "dataset",
    "metrics",
    "metrics_value",
    "sensor",
    "regions",
    "original_samples",
    "num_samples",
    "sampling_percentage",
    "num_classes",
    "classes",
    "image_resolution",
    "spatial_resolution",
    "bands_used",
    "augmentations",
    "optimizer",
    "batch_size",
    "learning_rate",
    "epochs",
    "loss_function",
    "split_ratio",
)

# historical records use "task" for the benchmark application type
BENCHMARK_INPUT_ALIASES = {"task": "application_type"}


@dataclass
class Violation:
    """One schema rule broken by a record."""

    field_path: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.field_path}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def _pick(data: dict, names) -> dict:
    return {k: data[k] for k in names if k in data and data[k] is not None}


@dataclass
class PretrainingPhase:
    dataset: Optional[str] = None
    regions_coverage: Optional[list] = None
    time_range: Optional[str] = None
    num_images: Optional[int] = None
    token_size: Optional[str] = None
    image_resolution: Optional[str] = None
    epochs: Optional[int] = None
    batch_size: Optional[int] = None
    learning_rate: Optional[str] = None
    augmentations: Optional[list] = None
    processing: Optional[list] = None
    sampling: Optional[str] = None
    processing_level: Optional[str] = None
    cloud_cover: Optional[str] = None
    missing_data: Optional[str] = None
    masking_ratio: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "PretrainingPhase":
        known = _pick(data, PHASE_FIELDS)
        extra = {k: v for k, v in data.items() if k not in PHASE_FIELDS}
        return cls(**known, extra=extra)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in PHASE_FIELDS if getattr(self, k) is not None}
        out.update(self.extra)
        return out


@dataclass
class BenchmarkEntry:
    application_type: Optional[str] = None
    application: Optional[str] = None
    dataset: Optional[str] = None
    metrics: Optional[list] = None
    metrics_value: Optional[list] = None
    sensor: Optional[list] = None
    regions: Optional[list] = None
    original_samples: Optional[int] = None
    num_samples: Optional[int] = None
    sampling_percentage: Optional[float] = None
    num_classes: Optional[int] = None
    classes: Optional[list] = None
    image_resolution: Optional[str] = None
    spatial_resolution: Optional[str] = None
    bands_used: Optional[list] = None
    augmentations: Optional[list] = None
    optimizer: Optional[str] = None
    batch_size: Optional[int] = None
    learning_rate: Optional[float] = None
    epochs: Optional[int] = None
    loss_function: Optional[str] = None
    split_ratio: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkEntry":
        data = {BENCHMARK_INPUT_ALIASES.get(k, k): v for k, v in data.items()}
        known = _pick(data, BENCHMARK_FIELDS)
        extra = {k: v for k, v in data.items() if k not in BENCHMARK_FIELDS}
        return cls(**known, extra=extra)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in BENCHMARK_FIELDS if getattr(self, k) is not None}
        out.update(self.extra)
        return out


@dataclass
class ModelRecord:
    model_id: Optional[str] = None
    model_name: Optional[str] = None
    version: Optional[str] = None
    release_date: Optional[str] = None
    last_updated: Optional[str] = None
    short_description: Optional[str] = None
    paper_link: Optional[str] = None
    citations: Optional[int] = None
    repository: Optional[str] = None
    weights: Optional[str] = None
    backbone: Optional[str] = None
    num_layers: Optional[int] = None
    num_parameters: Optional[float] = None
    pretext_training_type: Optional[str] = None
    masking_strategy: Optional[str] = None
    pretraining: Optional[str] = None
    domain_knowledge: Optional[list] = None
    backbone_modifications: Optional[list] = None
    supported_sensors: Optional[list] = None
    modality_integration_type: Optional[str] = None
    modalities: Optional[list] = None
    spectral_alignment: Optional[str] = None
    temporal_alignment: Optional[str] = None
    spatial_resolution: Optional[str] = None
    temporal_resolution: Optional[str] = None
    bands: Optional[list] = None
    pretraining_phases: list = field(default_factory=list)
    benchmarks: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    parse_issues: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelRecord":
        known = _pick(data, RECORD_SCALAR_FIELDS + RECORD_LIST_FIELDS)
        issues = []
        phases, benches = [], []
        raw_phases = data.get("pretraining_phases")
        if raw_phases is not None:
            if isinstance(raw_phases, list):
                for i, item in enumerate(raw_phases):
                    if isinstance(item, dict):
                        phases.append(PretrainingPhase.from_dict(item))
                    else:
                        issues.append(f"pretraining_phases[{i}]: expected an object")
            else:
                issues.append("pretraining_phases: expected a list")
        raw_benches = data.get("benchmarks")
        if raw_benches is not None:
            if isinstance(raw_benches, list):
                for i, item in enumerate(raw_benches):
                    if isinstance(item, dict):
                        benches.append(BenchmarkEntry.from_dict(item))
                    else:
                        issues.append(f"benchmarks[{i}]: expected an object")
            else:
                issues.append("benchmarks: expected a list")
        handled = set(RECORD_SCALAR_FIELDS) | set(RECORD_LIST_FIELDS)
        handled |= {"pretraining_phases", "benchmarks"}
        extra = {k: v for k, v in data.items() if k not in handled}
        return cls(
            **known,
            pretraining_phases=phases,
            benchmarks=benches,
            extra=extra,
            parse_issues=issues,
        )

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for k in RECORD_SCALAR_FIELDS + RECORD_LIST_FIELDS:
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        if self.pretraining_phases:
            out["pretraining_phases"] = [p.to_dict() for p in self.pretraining_phases]
        if self.benchmarks:
            out["benchmarks"] = [b.to_dict() for b in self.benchmarks]
        out.update(self.extra)
        return out


def _is_iso_date(value) -> bool:
    if not isinstance(value, str):
        return False
    try:
        date.fromisoformat(value)
        return True
    except ValueError:
        return False


def _check_int(violations, path, value, minimum, rule):
    if value is None:
        return
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        violations.append(Violation(path, rule, f"got {value!r}"))


def _check_number(violations, path, value, rule, low=None, high=None, strict_low=False):
    if value is None:
        return
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        violations.append(Violation(path, rule, f"got {value!r}"))
        return
    if low is not None and (value <= low if strict_low else value < low):
        violations.append(Violation(path, rule, f"got {value!r}"))
    elif high is not None and value > high:
        violations.append(Violation(path, rule, f"got {value!r}"))


def validate_record(record: ModelRecord) -> list[Violation]:
    """Check every schema invariant; returns an empty list iff all hold.

    Total over well-formed documents: bad values become violations, never
    exceptions.
    """
    v: list[Violation] = []
    for issue in record.parse_issues:
        path, _, detail = issue.partition(": ")
        v.append(Violation(path, "must match the schema type", detail))

    if not record.model_id or not isinstance(record.model_id, str) or not record.model_id.strip():
        v.append(Violation("model_id", "must be a non-empty string"))
    if not record.model_name or not isinstance(record.model_name, str) or not record.model_name.strip():
        v.append(Violation("model_name", "must be a non-empty string"))

    for name in ("release_date", "last_updated"):
        value = getattr(record, name)
        if value is not None and not _is_iso_date(value):
            v.append(Violation(name, "must be an ISO-8601 date (YYYY-MM-DD)", f"got {value!r}"))

    for name in ("spectral_alignment", "temporal_alignment"):
        value = getattr(record, name)
        if value is not None and value not in ALIGNMENT_VALUES:
            v.append(Violation(name, f"must be one of {ALIGNMENT_VALUES}", f"got {value!r}"))

    _check_int(v, "citations", record.citations, 0, "must be a non-negative integer")
    _check_int(v, "num_layers", record.num_layers, 1, "must be a positive integer")
    _check_number(v, "num_parameters", record.num_parameters,
                  "must be a positive number (millions of parameters)", low=0, strict_low=True)

    for i, phase in enumerate(record.pretraining_phases):
        prefix = f"pretraining_phases[{i}]"
        _check_number(v, f"{prefix}.masking_ratio", phase.masking_ratio,
                      "must lie in [0, 1]", low=0.0, high=1.0)
        _check_int(v, f"{prefix}.num_images", phase.num_images, 1, "must be a positive integer")
        _check_int(v, f"{prefix}.epochs", phase.epochs, 1, "must be a positive integer")
        _check_int(v, f"{prefix}.batch_size", phase.batch_size, 1, "must be a positive integer")

    for i, bench in enumerate(record.benchmarks):
        prefix = f"benchmarks[{i}]"
        metrics = bench.metrics or []
        values = bench.metrics_value or []
        if len(metrics) != len(values):
            v.append(Violation(
                f"{prefix}.metrics_value",
                "must have the same length as metrics",
                f"{len(metrics)} metrics vs {len(values)} values",
            ))
        _check_number(v, f"{prefix}.sampling_percentage", bench.sampling_percentage,
                      "must lie in [0, 100]", low=0.0, high=100.0)
        if bench.num_classes is not None and bench.classes is not None:
            if bench.num_classes != len(bench.classes):
                v.append(Violation(
                    f"{prefix}.num_classes",
                    "must equal the number of listed classes",
                    f"{bench.num_classes} vs {len(bench.classes)}",
                ))
    return v


@dataclass
class LoadIssue:
    line_no: int
    message: str
    model_id: Optional[str] = None


@dataclass
class Catalog:
    records: list = field(default_factory=list)
    by_id: dict = field(default_factory=dict)
    issues: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, model_id: str) -> Optional[ModelRecord]:
        return self.by_id.get(model_id)


def load_catalog(path) -> Catalog:
    """Load a line-delimited catalog file.

    Malformed lines are skipped and reported. A record failing validation is
    excluded and reported. On duplicate model_id the later record loses.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    catalog = Catalog()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            catalog.issues.append(LoadIssue(line_no, f"malformed JSON: {exc.msg}"))
            continue
        if not isinstance(data, dict):
            catalog.issues.append(LoadIssue(line_no, "line is not a JSON object"))
            continue
        record = ModelRecord.from_dict(data)
        violations = validate_record(record)
        if violations:
            summary = "; ".join(str(x) for x in violations)
            catalog.issues.append(LoadIssue(line_no, f"invalid record: {summary}", record.model_id))
            continue
        if record.model_id in catalog.by_id:
            catalog.issues.append(
                LoadIssue(line_no, "duplicate model_id, record rejected", record.model_id)
            )
            continue
        catalog.records.append(record)
        catalog.by_id[record.model_id] = record
    if catalog.issues:
        logger.warning("catalog %s loaded with %d issue(s)", path, len(catalog.issues))
    return catalog


def save_catalog(catalog: Catalog, path) -> None:
    lines = [json.dumps(r.to_dict(), ensure_ascii=False) for r in catalog.records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def append_record(record: ModelRecord, path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def render_retrieval_text(record: ModelRecord) -> str:
    """Flatten a record into the tagged text that gets embedded.

    Each field is prefixed with a bracketed type-indicator token; the field
    order is fixed so identical records always render identically.
    """
    parts: list[str] = []
    if record.model_name:
        parts.append(f"[NAME] {record.model_name}")
    if record.short_description:
        parts.append(f"[DESCRIPTION] {record.short_description}")
    seen = set()
    for bench in record.benchmarks:
        app = bench.application
        if app and app not in seen:
            seen.add(app)
            parts.append(f"[APPLICATION] {app}")
    for modality in record.modalities or []:
        parts.append(f"[MODALITY] {modality}")
    for sensor in record.supported_sensors or []:
        parts.append(f"[SENSOR] {sensor}")
    if record.spatial_resolution:
        parts.append(f"[RESOLUTION] {record.spatial_resolution}")
    if record.backbone:
        parts.append(f"[BACKBONE] {record.backbone}")
    return " ".join(parts)
