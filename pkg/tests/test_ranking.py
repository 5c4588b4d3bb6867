import json
import random

import pytest

from fmselect.catalog import BenchmarkEntry, ModelRecord
from fmselect.extraction import ExtractionConfig
from fmselect.gateway import ScriptedProvider
from fmselect.query import StructuredQuery
from fmselect.ranking import (
    build_ranking_prompt,
    hard_filter,
    icl_rank,
    selection_confidence,
)

EXAMPLE_RANKING = json.dumps([
    {"model": "S2MAE", "rank": 1, "reason": [
        "Directly supports Sentinel-2 multispectral data",
        "Achieves 99.1% accuracy on EuroSAT, exceeding 85% requirement",
        "Purpose-built for land cover classification"]},
    {"model": "Prithvi", "rank": 2, "reason": [
        "Supports multi-temporal multispectral data, including Sentinel-2",
        "Accuracy slightly below requirement on similar tasks",
        "More generalist FM"]},
    {"model": "CACo", "rank": 3, "reason": [
        "Only supports RGB modality",
        "Accuracy below the 85% requirement",
        "Designed mainly for change detection and event retrieval"]},
])


@pytest.fixture()
def worked_example_records(seed_catalog):
    return [seed_catalog.get(mid) for mid in ("S2MAE", "Prithvi", "CACo")]


class TestHardFilter:
    def test_worked_example_elimination(self, worked_example_records, classification_query):
        report = hard_filter(worked_example_records, classification_query)
        assert "S2MAE" in report.surviving
        caco = [e for e in report.eliminated if e.model_id == "CACo"]
        constraints = {e.constraint for e in caco}
        assert "modality" in constraints
        assert "min_performance" in constraints

    def test_performance_floor_met(self, seed_catalog, classification_query):
        # EuroSAT accuracy 99.09 clears the 85 floor
        report = hard_filter([seed_catalog.get("A2-MAE")], classification_query)
        assert report.surviving == ["A2-MAE"]

    def test_vacuous_constraints_keep_everyone(self, worked_example_records):
        query = StructuredQuery(application="anything", modality=None)
        report = hard_filter(worked_example_records, query)
        assert len(report.surviving) == 3
        assert report.eliminated == []

    def test_no_optional_constraints(self, seed_catalog):
        records = [seed_catalog.get(m) for m in ("S2MAE", "Prithvi", "A2-MAE")]
        query = StructuredQuery(application="land cover classification",
                                modality="multispectral")
        report = hard_filter(records, query)
        assert len(report.surviving) == 3

    def test_partition_property(self, seed_catalog, classification_query):
        report = hard_filter(seed_catalog.records, classification_query)
        ids = {r.model_id for r in seed_catalog.records}
        assert set(report.surviving) | report.eliminated_ids() == ids
        assert not set(report.surviving) & report.eliminated_ids()

    def test_canonical_modality_matching(self):
        record = ModelRecord(model_id="m", model_name="m", modalities=["Multi-Spectral"])
        query = StructuredQuery(application="x", modality="multispectral")
        assert hard_filter([record], query).surviving == ["m"]

    def test_canonical_metric_matching(self):
        record = ModelRecord(
            model_id="m", model_name="m", modalities=["SAR"],
            benchmarks=[BenchmarkEntry(application="flood mapping",
                                       metrics=["ACC"], metrics_value=[90.0])],
        )
        query = StructuredQuery.from_dict({
            "application": "flood mapping", "modality": "SAR",
            "min_performance": {"metric": ["accuracy"], "value": [85]},
        })
        assert hard_filter([record], query).surviving == ["m"]

    def test_metric_scoped_to_matching_application(self):
        # the only accuracy >= 90 sits on an unrelated benchmark; the
        # application-matched benchmark misses the floor
        record = ModelRecord(
            model_id="m", model_name="m", modalities=["SAR"],
            benchmarks=[
                BenchmarkEntry(application="flood mapping",
                               metrics=["accuracy"], metrics_value=[70.0]),
                BenchmarkEntry(application="scene classification",
                               metrics=["accuracy"], metrics_value=[95.0]),
            ],
        )
        query = StructuredQuery.from_dict({
            "application": "flood mapping", "modality": "SAR",
            "min_performance": {"metric": ["accuracy"], "value": [90]},
        })
        report = hard_filter([record], query)
        assert report.surviving == []

    def test_metric_falls_back_to_any_benchmark(self):
        record = ModelRecord(
            model_id="m", model_name="m", modalities=["SAR"],
            benchmarks=[BenchmarkEntry(application="scene classification",
                                       metrics=["accuracy"], metrics_value=[95.0])],
        )
        query = StructuredQuery.from_dict({
            "application": "flood mapping", "modality": "SAR",
            "min_performance": {"metric": ["accuracy"], "value": [90]},
        })
        assert hard_filter([record], query).surviving == ["m"]

    def test_sensor_constraint(self, seed_catalog):
        query = StructuredQuery.from_dict({
            "application": "land cover classification",
            "modality": "multispectral",
            "sensor": ["EnMAP"],
        })
        report = hard_filter([seed_catalog.get("S2MAE")], query)
        assert report.surviving == []
        assert report.eliminated[0].constraint == "sensor"


def random_record(rng, index):
    metrics = rng.sample(["accuracy", "mIoU", "F1", "mAP"], k=rng.randint(1, 3))
    return ModelRecord(
        model_id=f"r{index}", model_name=f"r{index}",
        modalities=rng.sample(["SAR", "multispectral", "RGB", "hyperspectral"],
                              k=rng.randint(1, 3)),
        supported_sensors=rng.sample(["Sentinel-1", "Sentinel-2", "MODIS"],
                                     k=rng.randint(0, 3)),
        benchmarks=[BenchmarkEntry(
            application=rng.choice(["flood mapping", "scene classification"]),
            metrics=metrics,
            metrics_value=[round(rng.uniform(40, 100), 2) for _ in metrics],
        )],
    )


def random_query(rng):
    data = {
        "application": rng.choice(["flood mapping", "scene classification"]),
        "modality": rng.choice(["SAR", "multispectral", "RGB", "hyperspectral"]),
    }
    if rng.random() < 0.5:
        data["sensor"] = [rng.choice(["Sentinel-1", "Sentinel-2", "MODIS"])]
    metrics = rng.sample(["accuracy", "mIoU", "F1"], k=rng.randint(1, 2))
    data["min_performance"] = {
        "metric": metrics,
        "value": [round(rng.uniform(50, 95), 1) for _ in metrics],
    }
    return StructuredQuery.from_dict(data)


class TestFilterMonotonicity:
    def test_relaxing_floor_never_shrinks_survivors(self):
        rng = random.Random(7)
        records = [random_record(rng, i) for i in range(12)]
        for _ in range(200):
            query = random_query(rng)
            strict = set(hard_filter(records, query).surviving)
            relaxed_query = query.copy()
            relaxed_query.min_performance.value = [
                v - rng.uniform(0, 30) for v in relaxed_query.min_performance.value
            ]
            relaxed = set(hard_filter(records, relaxed_query).surviving)
            assert strict <= relaxed


class TestSelectionConfidence:
    def test_unanimous_certainty(self):
        assert selection_confidence(["A", "A", "A"], 0.0) == pytest.approx(1.0)

    def test_majority_example(self):
        value = selection_confidence(["A", "A", "B"], -0.5)
        assert value == pytest.approx(0.5765179899, abs=1e-9)

    def test_single_vote(self):
        # self-consistency is 1 by definition; only the log-prob term varies
        from fmselect.extraction import field_confidence

        config = ExtractionConfig()
        value = selection_confidence(["A"], -1.0, config)
        assert value == pytest.approx(field_confidence(-1.0, 1.0, config).confidence)

    def test_empty_votes_rejected(self):
        with pytest.raises(ValueError):
            selection_confidence([], -0.5)


class TestIclRank:
    def test_single_survivor_rank_one(self, seed_catalog, classification_query):
        provider = ScriptedProvider({})  # fallback text is unparseable
        result = icl_rank(classification_query, [seed_catalog.get("S2MAE")], provider)
        assert len(result.candidates) == 1
        assert result.candidates[0].rank == 1
        assert result.candidates[0].model_id == "S2MAE"

    def test_worked_example_order(self, worked_example_records, classification_query):
        provider = ScriptedProvider({
            "1. S2MAE (": {"text": EXAMPLE_RANKING, "logprob": -0.1},
        })
        result = icl_rank(classification_query, worked_example_records, provider)
        assert [c.model_id for c in result.candidates] == ["S2MAE", "Prithvi", "CACo"]
        assert [c.rank for c in result.candidates] == [1, 2, 3]
        assert result.candidates[0].reasons[0] == "Directly supports Sentinel-2 multispectral data"
        assert not result.degraded

    def test_majority_vote_on_top1(self, worked_example_records, classification_query):
        a_first = json.dumps([{"model": "S2MAE", "rank": 1, "reason": ["x"]},
                              {"model": "CACo", "rank": 2, "reason": ["y"]}])
        b_first = json.dumps([{"model": "CACo", "rank": 1, "reason": ["y"]},
                              {"model": "S2MAE", "rank": 2, "reason": ["x"]}])
        provider = ScriptedProvider({
            "1. S2MAE (": [
                {"text": a_first, "logprob": -0.2},
                {"text": a_first, "logprob": -0.2},
                {"text": b_first, "logprob": -0.1},
            ],
        })
        result = icl_rank(classification_query, worked_example_records, provider, repeats=3)
        assert result.candidates[0].model_id == "S2MAE"
        # two of three generations agree on the top pick
        assert result.candidates[0].selection_confidence == pytest.approx(
            selection_confidence(["S2MAE", "S2MAE", "CACo"], -0.2), abs=1e-9,
        )

    def test_unknown_names_dropped_and_ranks_compacted(self, worked_example_records,
                                                       classification_query):
        text = json.dumps([
            {"model": "S2MAE", "rank": 1, "reason": ["a"]},
            {"model": "TotallyMadeUp", "rank": 2, "reason": ["b"]},
            {"model": "CACo", "rank": 3, "reason": ["c"]},
        ])
        provider = ScriptedProvider({"1. S2MAE (": {"text": text, "logprob": -0.1}})
        result = icl_rank(classification_query, worked_example_records, provider)
        assert [(c.model_id, c.rank) for c in result.candidates] == [
            ("S2MAE", 1), ("CACo", 2),
        ]

    def test_degraded_mode_uses_input_order(self, worked_example_records,
                                            classification_query):
        provider = ScriptedProvider({}, fallback=("no json", -2.0))
        result = icl_rank(classification_query, worked_example_records, provider)
        assert result.degraded
        assert [c.model_id for c in result.candidates] == ["S2MAE", "Prithvi", "CACo"]
        assert all(c.selection_confidence == 0.0 for c in result.candidates)
        assert all(c.reasons for c in result.candidates)

    def test_ranks_are_contiguous_permutation(self, worked_example_records,
                                              classification_query):
        provider = ScriptedProvider({
            "1. S2MAE (": {"text": EXAMPLE_RANKING, "logprob": -0.1},
        })
        result = icl_rank(classification_query, worked_example_records, provider)
        assert [c.rank for c in result.candidates] == list(range(1, len(result.candidates) + 1))
        assert len({c.model_id for c in result.candidates}) == len(result.candidates)

    def test_deterministic_under_scripted_provider(self, worked_example_records,
                                                   classification_query):
        provider = ScriptedProvider({
            "1. S2MAE (": {"text": EXAMPLE_RANKING, "logprob": -0.1},
        })
        first = icl_rank(classification_query, worked_example_records, provider)
        second = icl_rank(classification_query, worked_example_records, provider)
        assert [c.to_dict() for c in first.candidates] == [c.to_dict() for c in second.candidates]

    def test_empty_survivors_rejected(self, classification_query):
        with pytest.raises(ValueError):
            icl_rank(classification_query, [], ScriptedProvider({}))

    def test_prompt_carries_query_and_memory(self, worked_example_records,
                                             classification_query):
        prompt = build_ranking_prompt(classification_query, worked_example_records,
                                      memory_context="- past query: x -> selected: y")
        assert '"application": "land cover classification"' in prompt
        assert "past query: x" in prompt
        assert prompt.count("Candidate Models:") == 2  # worked example + live block
