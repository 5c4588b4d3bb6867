import math

import numpy as np
import pytest

from fmselect.catalog import Catalog, ModelRecord, render_retrieval_text
from fmselect.retrieval import (
    VectorIndex,
    build_index,
    load_index,
    save_index,
    search,
    search_vector,
)


def small_catalog(n=3):
    catalog = Catalog()
    for i in range(n):
        record = ModelRecord(
            model_id=f"m{i}", model_name=f"Model {i}",
            short_description=f"model number {i} about topic {i}",
            modalities=["SAR" if i % 2 else "RGB"],
        )
        catalog.records.append(record)
        catalog.by_id[record.model_id] = record
    return catalog


@pytest.fixture()
def angle_index():
    """Five 2-D vectors at known angles from the x axis."""
    angles = {"deg0": 0, "deg30": 30, "deg60": 60, "deg90": 90, "deg180": 180}
    entries = [
        (key, [math.cos(math.radians(a)), math.sin(math.radians(a))], "record")
        for key, a in angles.items()
    ]
    return VectorIndex.from_entries(entries)


class TestBuildIndex:
    def test_one_entry_per_record_unit_norm(self, embedder):
        index = build_index(small_catalog(3), embedder)
        assert len(index) == 3
        norms = np.linalg.norm(index.matrix, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-6)

    def test_rebuild_identical(self, embedder):
        catalog = small_catalog(4)
        first = build_index(catalog, embedder)
        second = build_index(catalog, embedder)
        assert first.keys == second.keys
        assert np.array_equal(first.matrix, second.matrix)

    def test_empty_catalog_rejected(self, embedder):
        with pytest.raises(ValueError):
            build_index(Catalog(), embedder)

    def test_embedding_failure_names_record(self):
        class Broken:
            def embed(self, text):
                raise RuntimeError("nope")

        with pytest.raises(RuntimeError, match="m0"):
            build_index(small_catalog(1), Broken())

    def test_duplicate_keys_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            VectorIndex.from_entries([("k", [1.0, 0.0], "a"), ("k", [0.0, 1.0], "b")])


class TestSearch:
    def test_self_similarity_first(self, embedder):
        catalog = small_catalog(3)
        index = build_index(catalog, embedder)
        text = render_retrieval_text(catalog.records[1])
        hits = search(index, embedder, text, k=3, min_similarity=-1.0)
        assert hits[0].key == "m1"
        assert hits[0].similarity == pytest.approx(1.0, abs=1e-6)

    def test_unreachable_threshold_returns_empty(self, embedder):
        index = build_index(small_catalog(3), embedder)
        assert search(index, embedder, "anything", k=3, min_similarity=1.1) == []

    def test_known_angles(self, angle_index):
        hits = search_vector(angle_index, [1.0, 0.0], k=3, min_similarity=0.4)
        assert [h.key for h in hits] == ["deg0", "deg30", "deg60"]
        assert hits[0].similarity == pytest.approx(1.0, abs=1e-9)
        assert hits[1].similarity == pytest.approx(math.sqrt(3) / 2, abs=1e-6)
        assert hits[2].similarity == pytest.approx(0.5, abs=1e-6)

    def test_full_recall_with_floor_disabled(self, angle_index):
        hits = search_vector(angle_index, [1.0, 0.0], k=len(angle_index), min_similarity=-1.0)
        assert len(hits) == len(angle_index)
        assert all(-1.0 - 1e-9 <= h.similarity <= 1.0 + 1e-9 for h in hits)

    def test_tie_broken_by_key(self):
        index = VectorIndex.from_entries([
            ("zebra", [1.0, 0.0], "r"), ("apple", [1.0, 0.0], "r"),
        ])
        hits = search_vector(index, [1.0, 0.0], k=2)
        assert [h.key for h in hits] == ["apple", "zebra"]

    def test_dimension_mismatch(self, angle_index):
        with pytest.raises(ValueError, match="dimension"):
            search_vector(angle_index, [1.0, 0.0, 0.0], k=1)

    def test_k_validated(self, angle_index):
        with pytest.raises(ValueError):
            search_vector(angle_index, [1.0, 0.0], k=0)

    def test_seed_catalog_self_retrieval(self, seed_catalog, seed_index, embedder):
        for record in seed_catalog.records:
            hits = search(seed_index, embedder, render_retrieval_text(record),
                          k=1, min_similarity=-1.0)
            assert hits[0].key == record.model_id


class TestIndexCache:
    def test_round_trip(self, tmp_path, seed_index):
        path = tmp_path / "vectors.cache"
        save_index(seed_index, path)
        loaded = load_index(path)
        assert loaded.dimension == seed_index.dimension
        assert loaded.keys == seed_index.keys
        assert loaded.tags == seed_index.tags
        assert np.array_equal(loaded.matrix, seed_index.matrix)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.cache"
        path.write_bytes(b"not a cache")
        with pytest.raises(ValueError):
            load_index(path)
