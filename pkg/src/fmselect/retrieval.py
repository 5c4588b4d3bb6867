"""In-memory cosine vector index over rendered catalog documents.

The catalog is small (a couple hundred records), so search is an exact
scan: deterministic, dependency-free, and still instant at this scale.
The index is immutable after build; rebuild and swap on catalog change.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import Catalog, render_retrieval_text

DEFAULT_TOP_K = 20
DEFAULT_MIN_SIMILARITY = 0.30


@dataclass
class RetrievalHit:
    key: str
    similarity: float


@dataclass
class VectorIndex:
    dimension: int
    keys: list = field(default_factory=list)
    matrix: np.ndarray = None  # (n, dimension) float32, rows unit-norm
    tags: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.keys)

    @classmethod
    def from_entries(cls, entries) -> "VectorIndex":
        """Build directly from (key, vector, tag) triples; normalizes rows."""
        keys, rows, tags = [], [], []
        for key, vector, tag in entries:
            if key in keys:
                raise ValueError(f"duplicate index key: {key}")
            vec = np.asarray(vector, dtype=np.float32)
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise ValueError(f"zero vector for key {key}")
            keys.append(key)
            rows.append(vec / norm)
            tags.append(tag)
        matrix = np.vstack(rows)
        return cls(dimension=matrix.shape[1], keys=keys, matrix=matrix, tags=tags)


def build_index(catalog: Catalog, embedder) -> VectorIndex:
    """Embed every record's rendered text; key by model_id."""
    if not catalog.records:
        raise ValueError("cannot build an index over an empty catalog")
    entries = []
    for record in catalog.records:
        text = render_retrieval_text(record)
        try:
            vector = embedder.embed(text)
        except Exception as exc:
            raise RuntimeError(f"embedding failed for record {record.model_id}") from exc
        entries.append((record.model_id, vector, "record"))
    return VectorIndex.from_entries(entries)


def search_vector(index: VectorIndex, query_vector, k: int,
                  min_similarity: float = -1.0) -> list[RetrievalHit]:
    """Exact cosine top-k with a similarity floor.

    Results sort by similarity descending, ties by key ascending. An empty
    result is a normal outcome, never an error.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    vec = np.asarray(query_vector, dtype=np.float32)
    if vec.shape != (index.dimension,):
        raise ValueError(
            f"query dimension {vec.shape} does not match index dimension {index.dimension}"
        )
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec = vec / norm
    sims = index.matrix @ vec
    scored = [
        (float(s), key) for s, key in zip(sims, index.keys) if s >= min_similarity
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [RetrievalHit(key=key, similarity=s) for s, key in scored[:k]]


def search(index: VectorIndex, embedder, query_text: str, k: int = DEFAULT_TOP_K,
           min_similarity: float = DEFAULT_MIN_SIMILARITY) -> list[RetrievalHit]:
    return search_vector(index, embedder.embed(query_text), k, min_similarity)


_CACHE_MAGIC = b"FMIX"


def save_index(index: VectorIndex, path) -> None:
    """Binary cache: header (dimension, count) then per-entry key, tag, floats."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<II", index.dimension, len(index.keys)))
        for key, tag, row in zip(index.keys, index.tags, index.matrix):
            for s in (key, tag):
                raw = s.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
            fh.write(row.astype("<f4").tobytes())


def load_index(path) -> VectorIndex:
    data = Path(path).read_bytes()
    if data[:4] != _CACHE_MAGIC:
        raise ValueError("not an index cache file")
    dimension, count = struct.unpack_from("<II", data, 4)
    offset = 12
    keys, tags, rows = [], [], []
    for _ in range(count):
        strings = []
        for _ in range(2):
            (length,) = struct.unpack_from("<H", data, offset)
            offset += 2
            strings.append(data[offset:offset + length].decode("utf-8"))
            offset += length
        keys.append(strings[0])
        tags.append(strings[1])
        rows.append(np.frombuffer(data, dtype="<f4", count=dimension, offset=offset))
        offset += 4 * dimension
    matrix = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dimension), np.float32)
    return VectorIndex(dimension=dimension, keys=keys, matrix=matrix, tags=tags)
