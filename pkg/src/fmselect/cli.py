"""Command-line entry points: select, ingest, eval, serve, index."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import append_record, validate_record
from .config import AppConfig, build_stack
from .extraction import review_line, run_extraction
from .orchestrator import SimulatedUser


def _add_config_arg(parser):
    parser.add_argument("--config", help="path to a JSON config file")


def _load_config(args) -> AppConfig:
    return AppConfig.load(getattr(args, "config", None))


def cmd_select(args) -> int:
    stack = build_stack(_load_config(args))
    simulated = SimulatedUser() if args.auto_answer else None
    state, output = stack.orchestrator.one_shot(args.query, k=args.k,
                                                simulated_user=simulated)
    payload = {
        "status": output.status,
        "questions": [q.to_dict() for q in output.questions],
        "recommendations": [c.to_dict() for c in output.recommendations],
        "explanations": [e.to_dict() for e in output.explanations],
        "metadata": output.metadata,
        "trace": state.trace,
    }
    print(json.dumps(payload, indent=2, ensure_ascii=False))
    if stack.memory is not None and stack.config.memory_path:
        stack.memory.save(stack.config.memory_path)
    return 0


def cmd_ingest(args) -> int:
    config = _load_config(args)
    stack = build_stack(config)
    sources = [Path(p).read_text(encoding="utf-8") for p in args.sources]
    record, confidences = run_extraction(sources, config.extraction_config(),
                                         stack.provider)
    violations = validate_record(record)
    if violations:
        print("record failed validation:", file=sys.stderr)
        for v in violations:
            print(f"  - {v}", file=sys.stderr)
    if args.out:
        append_record(record, args.out)
        print(f"appended record to {args.out}")
    else:
        print(json.dumps(record.to_dict(), indent=2, ensure_ascii=False))
    if args.review_out:
        with open(args.review_out, "a", encoding="utf-8") as fh:
            fh.write(review_line(record, confidences) + "\n")
        flagged = sum(1 for c in confidences if c.flagged)
        print(f"{flagged} flagged field(s) written to {args.review_out}")
    return 1 if violations else 0


def cmd_eval(args) -> int:
    from .evaluation import (
        compute_metrics,
        expert_preferred,
        instantiate_benchmark,
        load_ratings,
        render_comparison_table,
        run_comparison,
    )
    from .evaluation.baselines import save_report
    from .evaluation.metrics import DEFAULT_HQ_THRESHOLD
    from .evaluation.scoring import aggregate_expert_score
    from .evaluation.templates import BenchmarkQuery, TemplateCategory

    config = _load_config(args)
    stack = build_stack(config)
    if args.queries:
        raw = json.loads(Path(args.queries).read_text(encoding="utf-8"))
        queries = [
            BenchmarkQuery(
                query_id=q["query_id"],
                text=q["text"],
                category=TemplateCategory(q.get("category", "composite")),
                template_id=q.get("template_id", ""),
                slots=q.get("slots", {}),
            )
            for q in raw
        ]
    else:
        queries = instantiate_benchmark(seed=args.seed,
                                        count_per_template=args.per_template)
        print(f"no --queries file given; generated {len(queries)} from the "
              f"templates (seed {args.seed})")
    report = run_comparison(
        queries, stack.catalog, stack.index, stack.embedder, stack.provider,
        systems=args.systems, k=config.k, config=config.orchestrator_config(),
    )
    print(render_comparison_table(report))
    if args.ratings:
        ratings = load_ratings(args.ratings)
        scores = {(r.query_id, r.model_id): aggregate_expert_score(r) for r in ratings}
        preferred = expert_preferred(ratings)
        print()
        for system in args.systems:
            per_query = {}
            for query in queries:
                selections = report.selections[system].get(query.query_id, [])
                scored = [
                    (c.model_id, scores[(query.query_id, c.model_id)])
                    for c in selections
                    if (query.query_id, c.model_id) in scores
                ]
                if scored:
                    per_query[query.query_id] = scored
            if not per_query:
                print(f"{system}: no rated selections")
                continue
            metrics = compute_metrics(per_query, preferred,
                                      hq_threshold=DEFAULT_HQ_THRESHOLD)
            print(f"{system}: {json.dumps(metrics.to_dict())}")
    if args.out:
        save_report(report, args.out)
        print(f"\nreport written to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    config = _load_config(args)
    if args.port:
        config.port = args.port
    app = create_app(build_stack(config))
    uvicorn.run(app, host=args.host, port=config.port)
    return 0


def cmd_index(args) -> int:
    from .retrieval import save_index

    config = _load_config(args)
    if args.index_action != "build":
        print(f"unknown index action: {args.index_action}", file=sys.stderr)
        return 2
    stack = build_stack(config)
    out = args.out or config.index_cache_path or "index.cache"
    save_index(stack.index, out)
    print(f"index of {len(stack.index)} vectors (dim {stack.index.dimension}) "
          f"written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmselect",
        description="Constraint-aware selection of remote sensing foundation models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="run one selection query")
    p.add_argument("query")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--auto-answer", action="store_true",
                   help="answer clarification rounds with the simulated user")
    _add_config_arg(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("ingest", help="extract a catalog record from source documents")
    p.add_argument("sources", nargs="+")
    p.add_argument("--out", help="catalog file to append the record to")
    p.add_argument("--review-out", help="sidecar file for flagged fields")
    _add_config_arg(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("eval", help="run the benchmark comparison")
    p.add_argument("--queries", help="JSON file of benchmark queries")
    p.add_argument("--ratings", help="CSV file of expert ratings")
    p.add_argument("--systems", nargs="+",
                   default=["agent", "naive_agent", "db_retrieval", "unstructured_rag"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-template", type=int, default=1)
    p.add_argument("--out", help="write the JSON report here")
    _add_config_arg(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int)
    p.add_argument("--host", default="127.0.0.1")
    _add_config_arg(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("index", help="vector index maintenance")
    p.add_argument("index_action", choices=["build"])
    p.add_argument("--out")
    _add_config_arg(p)
    p.set_defaults(func=cmd_index)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
