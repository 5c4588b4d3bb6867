import json

import pytest

from fmselect.catalog import load_catalog
from fmselect.config import default_catalog_path
from fmselect.gateway import HashingEmbedder
from fmselect.offline import OfflineProvider
from fmselect.query import StructuredQuery
from fmselect.retrieval import build_index


@pytest.fixture(scope="session")
def seed_catalog():
    return load_catalog(default_catalog_path())


@pytest.fixture(scope="session")
def embedder():
    return HashingEmbedder()


@pytest.fixture(scope="session")
def seed_index(seed_catalog, embedder):
    return build_index(seed_catalog, embedder)


@pytest.fixture()
def offline_provider():
    return OfflineProvider()


@pytest.fixture(scope="session")
def a2_mae_line():
    text = default_catalog_path().read_text(encoding="utf-8")
    for line in text.splitlines():
        if '"model_id": "A2-MAE"' in line:
            return line
    raise RuntimeError("A2-MAE record missing from the seed catalog")


@pytest.fixture()
def a2_mae_record(seed_catalog):
    return seed_catalog.get("A2-MAE")


@pytest.fixture()
def classification_query():
    """The worked-example query: Sentinel-2 multispectral land cover with a
    floor of 85 accuracy."""
    return StructuredQuery.from_dict({
        "application": "land cover classification",
        "modality": "multispectral",
        "sensor": ["Sentinel-2"],
        "min_performance": {"metric": ["accuracy"], "value": [85]},
    })


def write_jsonl(path, documents):
    path.write_text(
        "\n".join(json.dumps(d, ensure_ascii=False) for d in documents) + "\n",
        encoding="utf-8",
    )
