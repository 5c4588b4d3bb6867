import json

import pytest

from fmselect.cli import main


@pytest.fixture()
def offline_env(monkeypatch):
    monkeypatch.setenv("FMSELECT_PROVIDER", "offline")
    monkeypatch.setenv("FMSELECT_RETRIEVAL_MIN_SIMILARITY", "-1.0")


def test_select_command(offline_env, capsys):
    code = main(["select", "flood mapping with SAR imagery from Sentinel-1", "--k", "3"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "done"
    assert len(payload["recommendations"]) == 3


def test_select_underspecified_reports_questions(offline_env, capsys):
    code = main(["select", "recommend something nice"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "needs_clarification"
    assert payload["questions"]


def test_select_auto_answer(offline_env, capsys):
    code = main(["select", "recommend something nice", "--auto-answer"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] in ("done", "fallback")


def test_eval_command_generates_queries(offline_env, capsys, tmp_path):
    out = tmp_path / "report.json"
    code = main(["eval", "--systems", "db_retrieval", "naive_agent", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "A1-00" in stdout
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert set(payload["selections"]) == {"db_retrieval", "naive_agent"}


def test_eval_with_ratings(offline_env, capsys, tmp_path):
    queries = [{"query_id": "q1", "text": "flood mapping with SAR data"}]
    queries_path = tmp_path / "queries.json"
    queries_path.write_text(json.dumps(queries), encoding="utf-8")

    # rate every model the db_retrieval baseline can return for q1
    from fmselect.config import build_stack, AppConfig
    from fmselect.evaluation import run_baseline

    stack = build_stack(AppConfig(provider="offline", retrieval_min_similarity=-1.0))
    selections = run_baseline("db_retrieval", "flood mapping with SAR data",
                              stack.catalog, stack.index, stack.embedder, None)
    lines = ["query_id,system,model_id,application_compatibility,modality_match,"
             "reported_performance,efficiency,popularity,generalizability,recency"]
    for c in selections:
        lines.append(f"q1,db_retrieval,{c.model_id},4,4,4,4,4,4,4")
    ratings_path = tmp_path / "ratings.csv"
    ratings_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    code = main(["eval", "--queries", str(queries_path), "--ratings", str(ratings_path),
                 "--systems", "db_retrieval"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "avg_top1" in stdout


def test_index_build(offline_env, capsys, tmp_path):
    out = tmp_path / "index.cache"
    code = main(["index", "build", "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert "22 vectors" in capsys.readouterr().out


def test_ingest_writes_record_and_review(offline_env, capsys, tmp_path, monkeypatch):
    source = tmp_path / "card.md"
    source.write_text("SuperNet model card: a SAR foundation model.", encoding="utf-8")
    fixture = tmp_path / "fixture.json"
    fixture.write_text(json.dumps({
        "SuperNet model card": {
            "text": json.dumps({"model_id": "SuperNet", "model_name": "SuperNet",
                                "modalities": ["SAR"]}),
            "logprob": -0.05,
        },
    }), encoding="utf-8")
    monkeypatch.setenv("FMSELECT_PROVIDER", "scripted")
    monkeypatch.setenv("FMSELECT_SCRIPTED_FIXTURE", str(fixture))
    catalog_out = tmp_path / "new.jsonl"
    review_out = tmp_path / "review.jsonl"
    code = main(["ingest", str(source), "--out", str(catalog_out),
                 "--review-out", str(review_out)])
    assert code == 0
    record = json.loads(catalog_out.read_text(encoding="utf-8").strip())
    assert record["model_id"] == "SuperNet"
    review = json.loads(review_out.read_text(encoding="utf-8").strip())
    assert review["model_id"] == "SuperNet"
    assert review["flagged_fields"] == []
