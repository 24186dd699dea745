"""Command-line entry point wiring the pipeline stages into subcommands.

Exit codes: 0 clean, 1 partial failure (some files failed and were
logged), 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analyze, complete, pipeline, store
from .errors import ConfigError, EmptyCorpus, TableforgeError
from .ontology import load_registry

logger = logging.getLogger(__name__)

STAGE_COMMANDS = {
    "harvest": pipeline.run_harvest,
    "parse": pipeline.run_parse,
    "curate": pipeline.run_curate,
    "annotate": pipeline.run_annotate,
    "pipeline": pipeline.run_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tableforge",
        description="Harvest, curate, annotate, profile, and search a relational-table corpus.",
    )
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--topics", nargs="*", help="override configured topics")
        p.add_argument("--threshold", type=float, help="semantic annotation threshold")
        p.add_argument("--seed", type=int, help="run seed (recorded in sidecars)")
        p.add_argument("--out", help="output root directory")
        p.add_argument("--workers", type=int, help="download worker count")
        p.add_argument("--backend", choices=["simulated", "live"], help="backend override")
        return p

    for name, help_text in (
        ("harvest", "plan topic queries and download raw CSV files"),
        ("parse", "parse downloaded files and report outcomes"),
        ("curate", "parse and apply the table-level filters"),
        ("annotate", "parse, curate, and annotate columns"),
        ("pipeline", "run harvest through store end to end"),
        ("stats", "corpus statistics over the store"),
    ):
        add(name, help_text)

    eval_p = add("eval", "agreement against gold labels")
    eval_p.add_argument("--gold", required=True, help="gold labels JSONL")
    eval_p.add_argument("--method", choices=["syntactic", "semantic"], default="semantic")

    complete_p = add("complete", "schema completion for a prefix")
    complete_p.add_argument("--prefix", required=True, help="comma-separated attribute prefix")
    complete_p.add_argument("--k", type=int, default=complete.DEFAULT_K)

    search_p = add("search", "natural-language table search")
    search_p.add_argument("--query", required=True)
    search_p.add_argument("--k", type=int, default=complete.DEFAULT_K)

    return parser


def _overrides(args: argparse.Namespace) -> dict:
    mapping = {
        "topics": args.topics,
        "threshold": args.threshold,
        "seed": args.seed,
        "out": Path(args.out) if args.out else None,
        "workers": args.workers,
        "backend_kind": args.backend,
    }
    return {k: v for k, v in mapping.items() if v is not None}


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def run(args: argparse.Namespace) -> int:
    config = pipeline.load_config(args.config, _overrides(args))
    report = pipeline.RunReport(
        subcommand=args.subcommand, config_hash=config.fingerprint(), seed=config.seed
    )

    if args.subcommand in STAGE_COMMANDS:
        STAGE_COMMANDS[args.subcommand](config, report)
        report.write(config.out)
        failed = report.counts.get("download_failed", 0) + report.counts.get("parse_failed", 0)
        return 1 if failed else 0

    corpus = store.Corpus(config.out / "tables")

    if args.subcommand == "stats":
        stats = analyze.corpus_stats(corpus)
        (config.out / "stats.json").write_bytes(store.canonical_json_bytes(stats.to_dict()))
        print(analyze.format_stats(stats))
        report.counts["tables"] = stats.table_count
        report.write(config.out)
        return 0

    if args.subcommand == "eval":
        registries = pipeline.load_registries(config)
        gold = analyze.load_gold_labels(args.gold)
        result = analyze.agreement_eval(corpus, gold, args.method, registries)
        analyze.write_disagreements(result, config.out / "disagreements.jsonl")
        _emit(result.to_dict())
        report.counts["gold_labels"] = len(gold)
        report.write(config.out)
        return 0

    provider = pipeline.make_provider(config)

    if args.subcommand == "complete":
        prefix = complete.SchemaPrefix.parse(args.prefix)
        schemas = complete.corpus_schemas(corpus)
        results, skipped = complete.nearest_completions(prefix, schemas, args.k, provider)
        _emit(
            {
                "query": list(prefix.attributes),
                "k": args.k,
                "skipped_schemas": skipped,
                "results": [r.to_dict() for r in results],
            }
        )
        report.counts["results"] = len(results)
        report.write(config.out)
        return 0

    if args.subcommand == "search":
        hits = complete.search(args.query, corpus, args.k, provider)
        _emit({"query": args.query, "k": args.k, "results": [h.to_dict() for h in hits]})
        report.counts["results"] = len(hits)
        report.write(config.out)
        return 0

    raise ConfigError(f"unknown subcommand {args.subcommand!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except (ConfigError, EmptyCorpus) as exc:
        logger.error("%s", exc)
        return 2
    except TableforgeError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
