#!/usr/bin/env python3
"""Record real service responses into the UI contract-test fixtures.

Boots the FastAPI app over the offline provider and the seed catalog, drives
the scenarios the vitest suite replays, and freezes every byte of the
responses into test/fixtures/backend.json. Re-run after changing the wire
format:

    python3 scripts/record_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from fmselect.config import AppConfig, build_stack
from fmselect.server import create_app

UNDERSPECIFIED_QUERY = "recommend a good model please"
COMPLETED_QUERY = ("I’m looking for a model I can use out-of-the-box for flood mapping "
                   "using SAR data. I don’t have any labeled training data.")

OUT_PATH = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "backend.json"


def main() -> None:
    config = AppConfig(provider="offline", retrieval_min_similarity=-1.0)
    client = TestClient(create_app(build_stack(config)))
    fixtures = {}

    fixtures["health"] = client.get("/health").json()
    fixtures["models"] = client.get("/models").json()

    under = client.post("/sessions", json={"query": UNDERSPECIFIED_QUERY, "k": 3})
    fixtures["session_underspecified"] = {
        "request": {"query": UNDERSPECIFIED_QUERY, "k": 3},
        "response": under.json(),
    }

    done = client.post("/sessions", json={"query": COMPLETED_QUERY, "k": 3})
    snapshot = done.json()
    assert snapshot["status"] == "done", snapshot["status"]
    assert len(snapshot["recommendations"]) == 3
    fixtures["session_completed"] = {
        "request": {"query": COMPLETED_QUERY, "k": 3},
        "response": snapshot,
    }

    # what-if with no overrides: the session's own constraints and survivors
    no_override_request = {"query": snapshot["query"], "model_ids": snapshot["survivors"]}
    preview = client.post("/rank/preview", json=no_override_request)
    fixtures["preview_no_overrides"] = {
        "request": no_override_request,
        "response": preview.json(),
    }

    # a monotonicity pair over a fixed pool: raising the floor may only grow
    # the eliminated set
    pool = ["S2MAE", "Prithvi", "CACo", "A2-MAE", "SSL4EO-S12"]
    base_query = {"application": "land cover classification", "modality": "multispectral"}
    for tag, floor in (("low", 85), ("high", 99.5)):
        request = {
            "query": {**base_query,
                      "min_performance": {"metric": ["accuracy"], "value": [floor]}},
            "model_ids": pool,
        }
        fixtures[f"preview_floor_{tag}"] = {
            "request": request,
            "response": client.post("/rank/preview", json=request).json(),
        }

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(fixtures, indent=2, ensure_ascii=False) + "\n",
                        encoding="utf-8")
    print(f"wrote {OUT_PATH} ({OUT_PATH.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
