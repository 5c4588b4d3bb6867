import json

import pytest

from fmselect.catalog import (
    BenchmarkEntry,
    ModelRecord,
    load_catalog,
    render_retrieval_text,
    save_catalog,
    validate_record,
)

from conftest import write_jsonl


class TestLoadCatalog:
    def test_single_record_file(self, tmp_path, a2_mae_line):
        path = tmp_path / "one.jsonl"
        path.write_text(a2_mae_line + "\n", encoding="utf-8")
        catalog = load_catalog(path)
        assert len(catalog) == 1
        assert not catalog.issues
        record = catalog.get("A2-MAE")
        assert record is not None
        assert len(record.benchmarks) == 7

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        catalog = load_catalog(path)
        assert len(catalog) == 0
        assert catalog.issues == []

    def test_duplicate_id_keeps_first(self, tmp_path):
        write_jsonl(tmp_path / "dup.jsonl", [
            {"model_id": "X", "model_name": "first"},
            {"model_id": "X", "model_name": "second"},
        ])
        catalog = load_catalog(tmp_path / "dup.jsonl")
        assert len(catalog) == 1
        assert catalog.get("X").model_name == "first"
        assert len(catalog.issues) == 1
        assert catalog.issues[0].line_no == 2
        assert "duplicate" in catalog.issues[0].message

    def test_malformed_line_reported_with_line_number(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text(
            '{"model_id": "A", "model_name": "A"}\n'
            "this is not json\n"
            '{"model_id": "B", "model_name": "B"}\n',
            encoding="utf-8",
        )
        catalog = load_catalog(path)
        assert len(catalog) == 2
        assert len(catalog.issues) == 1
        assert catalog.issues[0].line_no == 2

    def test_invalid_record_excluded(self, tmp_path):
        write_jsonl(tmp_path / "bad.jsonl", [
            {"model_id": "ok", "model_name": "ok"},
            {"model_id": "bad", "model_name": "bad", "spectral_alignment": "half"},
        ])
        catalog = load_catalog(tmp_path / "bad.jsonl")
        assert [r.model_id for r in catalog.records] == ["ok"]
        assert catalog.issues[0].model_id == "bad"

    def test_seed_catalog_loads_clean(self, seed_catalog):
        assert len(seed_catalog) >= 15
        assert seed_catalog.issues == []

    def test_round_trip_field_equal(self, tmp_path, seed_catalog):
        out = tmp_path / "copy.jsonl"
        save_catalog(seed_catalog, out)
        reloaded = load_catalog(out)
        assert len(reloaded) == len(seed_catalog)
        for original, copy in zip(seed_catalog.records, reloaded.records):
            assert original.to_dict() == copy.to_dict()

    def test_unknown_fields_preserved(self, tmp_path):
        doc = {"model_id": "m", "model_name": "m", "my_custom_note": {"a": 1}}
        write_jsonl(tmp_path / "extra.jsonl", [doc])
        catalog = load_catalog(tmp_path / "extra.jsonl")
        assert catalog.get("m").to_dict()["my_custom_note"] == {"a": 1}

    def test_benchmark_task_alias_normalized(self):
        record = ModelRecord.from_dict({
            "model_id": "m", "model_name": "m",
            "benchmarks": [{"task": "Classification", "application": "x"}],
        })
        assert record.benchmarks[0].application_type == "Classification"
        emitted = record.to_dict()["benchmarks"][0]
        assert "task" not in emitted
        assert emitted["application_type"] == "Classification"


class TestValidateRecord:
    def test_full_record_passes(self, a2_mae_record):
        assert validate_record(a2_mae_record) == []

    def test_alignment_enum(self):
        record = ModelRecord(model_id="m", model_name="m", spectral_alignment="half")
        violations = validate_record(record)
        assert len(violations) == 1
        assert violations[0].field_path == "spectral_alignment"
        assert "full" in violations[0].rule

    def test_metrics_length_mismatch(self):
        record = ModelRecord(
            model_id="m", model_name="m",
            benchmarks=[BenchmarkEntry(application="Land cover classification",
                                       dataset="EuroSAT",
                                       metrics=["Accuracy"],
                                       metrics_value=[99.09, 1.0])],
        )
        violations = validate_record(record)
        assert len(violations) == 1
        assert "metrics" in violations[0].field_path
        assert "length" in violations[0].rule

    def test_missing_identity_fields(self):
        violations = validate_record(ModelRecord.from_dict({}))
        paths = {v.field_path for v in violations}
        assert paths == {"model_id", "model_name"}

    @pytest.mark.parametrize("field,value", [
        ("citations", -1),
        ("citations", "many"),
        ("num_parameters", 0),
        ("num_parameters", -3.5),
        ("num_layers", 0),
        ("release_date", "June 2024"),
    ])
    def test_scalar_rules(self, field, value):
        record = ModelRecord.from_dict({"model_id": "m", "model_name": "m", field: value})
        violations = validate_record(record)
        assert any(v.field_path == field for v in violations)

    def test_nested_rules(self):
        record = ModelRecord.from_dict({
            "model_id": "m", "model_name": "m",
            "pretraining_phases": [{"masking_ratio": 1.5, "num_images": 0}],
            "benchmarks": [{"sampling_percentage": 120,
                            "num_classes": 3, "classes": ["a", "b"]}],
        })
        paths = {v.field_path for v in validate_record(record)}
        assert "pretraining_phases[0].masking_ratio" in paths
        assert "pretraining_phases[0].num_images" in paths
        assert "benchmarks[0].sampling_percentage" in paths
        assert "benchmarks[0].num_classes" in paths

    def test_total_over_weird_documents(self):
        # structurally well-formed JSON objects must never raise
        weird = [
            {"model_id": 7, "model_name": ["x"]},
            {"model_id": "m", "model_name": "m", "benchmarks": "nope"},
            {"model_id": "m", "model_name": "m", "pretraining_phases": [42]},
            {"model_id": "", "model_name": "   "},
        ]
        for doc in weird:
            validate_record(ModelRecord.from_dict(doc))


class TestRenderRetrievalText:
    def test_contains_tagged_fields(self, a2_mae_record):
        text = render_retrieval_text(a2_mae_record)
        assert "[MODALITY] Multispectral" in text
        assert "[APPLICATION] Land cover classification" in text
        assert text.startswith("[NAME] A2-MAE")

    def test_minimal_record(self):
        assert render_retrieval_text(ModelRecord(model_id="m", model_name="M")) == "[NAME] M"

    def test_deterministic(self, a2_mae_record):
        assert render_retrieval_text(a2_mae_record) == render_retrieval_text(a2_mae_record)

    def test_field_order_fixed(self):
        record = ModelRecord(
            model_id="m", model_name="M", short_description="desc",
            backbone="ViT", spatial_resolution="10m",
            modalities=["SAR"], supported_sensors=["Sentinel-1"],
            benchmarks=[BenchmarkEntry(application="flood mapping")],
        )
        assert render_retrieval_text(record) == (
            "[NAME] M [DESCRIPTION] desc [APPLICATION] flood mapping "
            "[MODALITY] SAR [SENSOR] Sentinel-1 [RESOLUTION] 10m [BACKBONE] ViT"
        )

    def test_injective_over_seed_catalog(self, seed_catalog):
        rendered = [render_retrieval_text(r) for r in seed_catalog.records]
        assert len(set(rendered)) == len(rendered)

    def test_duplicate_applications_emitted_once(self):
        record = ModelRecord(
            model_id="m", model_name="M",
            benchmarks=[BenchmarkEntry(application="flood mapping"),
                        BenchmarkEntry(application="flood mapping")],
        )
        assert render_retrieval_text(record).count("[APPLICATION]") == 1
