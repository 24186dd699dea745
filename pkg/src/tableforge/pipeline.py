"""Configuration loading and stage orchestration for the CLI.

A run is driven by a TOML config naming the topics, backend, registries,
embedding provider, and output root.  Stages are deterministic given the
same config and backend state; re-running any stage overwrites its
reports with identical content rather than appending, which is what
makes whole-pipeline re-runs idempotent.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import analyze, annotate, curate, harvest, store, tableparse
from .embed import DEFAULT_HASH_SEED, DEFAULT_HASHED_DIM, HashedNgramProvider, VectorFileProvider
from .errors import ConfigError, TableforgeError
from .ontology import TypeRegistry, load_registry

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    topics: list[str]
    backend_kind: str = "simulated"
    simulated_path: Path | None = None
    registries: list[tuple[Path, str]] = field(default_factory=list)
    vector_file: Path | None = None
    hashed_dim: int = DEFAULT_HASHED_DIM
    hashed_seed: int = DEFAULT_HASH_SEED
    threshold: float = annotate.DEFAULT_THRESHOLD
    allowlist_path: Path | None = None
    pii_policy_path: Path | None = None
    seed: int = 0
    out: Path = Path("corpus_out")
    workers: int = 8
    page_cap: int = harvest.PAGE_CAP

    def fingerprint(self) -> str:
        payload = {
            "topics": self.topics,
            "backend": self.backend_kind,
            "simulated_path": str(self.simulated_path),
            "registries": [[str(p), tag] for p, tag in self.registries],
            "vector_file": str(self.vector_file),
            "hashed_dim": self.hashed_dim,
            "hashed_seed": self.hashed_seed,
            "threshold": self.threshold,
            "allowlist": str(self.allowlist_path),
            "pii_policy": str(self.pii_policy_path),
            "seed": self.seed,
            "out": str(self.out),
            "workers": self.workers,
            "page_cap": self.page_cap,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Parse and validate a TOML config; overrides come from CLI flags."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    base = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    topics = raw.get("topics", [])
    topics_file = raw.get("topics_file")
    if topics_file:
        tf = resolve(topics_file)
        if not tf.exists():
            raise ConfigError(f"topics file {tf} does not exist")
        topics = [ln.strip() for ln in tf.read_text(encoding="utf-8").splitlines() if ln.strip()]

    registries = []
    for entry in raw.get("registry", []):
        try:
            registries.append((resolve(entry["path"]), entry["ontology"]))
        except KeyError as exc:
            raise ConfigError(f"registry entry missing {exc}") from None

    embedding = raw.get("embedding", {})
    config = PipelineConfig(
        topics=list(topics),
        backend_kind=raw.get("backend", "simulated"),
        simulated_path=resolve(raw["simulated_path"]) if "simulated_path" in raw else None,
        registries=registries,
        vector_file=resolve(embedding["vector_file"]) if "vector_file" in embedding else None,
        hashed_dim=int(embedding.get("hashed_dim", DEFAULT_HASHED_DIM)),
        hashed_seed=int(embedding.get("hashed_seed", DEFAULT_HASH_SEED)),
        threshold=float(raw.get("threshold", annotate.DEFAULT_THRESHOLD)),
        allowlist_path=resolve(raw["allowlist"]) if "allowlist" in raw else None,
        pii_policy_path=resolve(raw["pii_policy"]) if "pii_policy" in raw else None,
        seed=int(raw.get("seed", 0)),
        out=resolve(raw.get("out", "corpus_out")),
        workers=int(raw.get("workers", 8)),
        page_cap=int(raw.get("page_cap", harvest.PAGE_CAP)),
    )

    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(config, key, value)

    _validate(config)
    return config


def _validate(config: PipelineConfig) -> None:
    if config.backend_kind not in ("simulated", "live"):
        raise ConfigError(f"unknown backend {config.backend_kind!r}")
    if config.backend_kind == "simulated":
        if config.simulated_path is None or not Path(config.simulated_path).exists():
            raise ConfigError("simulated backend needs an existing simulated_path")
    for p, tag in config.registries:
        if not Path(p).exists():
            raise ConfigError(f"registry file {p} does not exist")
    for name in ("vector_file", "allowlist_path", "pii_policy_path"):
        p = getattr(config, name)
        if p is not None and not Path(p).exists():
            raise ConfigError(f"{name} {p} does not exist")
    if not 0.0 <= config.threshold <= 1.0:
        raise ConfigError("threshold must be in [0, 1]")


def make_backend(config: PipelineConfig):
    if config.backend_kind == "simulated":
        return harvest.SimulatedBackend.from_path(config.simulated_path)
    return harvest.LiveBackend()


def make_provider(config: PipelineConfig):
    if config.vector_file is not None:
        return VectorFileProvider(config.vector_file)
    return HashedNgramProvider(dim=config.hashed_dim, seed=config.hashed_seed)


def load_registries(config: PipelineConfig) -> dict[str, TypeRegistry]:
    return {tag: load_registry(path, tag) for path, tag in config.registries}


def _write_jsonl(path: Path, records) -> None:
    lines = "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in records)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(lines, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class RunReport:
    subcommand: str
    config_hash: str
    seed: int
    pipeline_version: str = store.PIPELINE_VERSION
    counts: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "subcommand": self.subcommand,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "pipeline_version": self.pipeline_version,
            "counts": dict(sorted(self.counts.items())),
        }
        target = out_dir / "run_report.json"
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(store.canonical_json_bytes(payload))
        os.replace(tmp, target)


def run_harvest(config: PipelineConfig, report: RunReport) -> list[harvest.FileRef]:
    """Plan, fetch, and download every configured topic into the raw store."""
    backend = make_backend(config)
    merged: dict[tuple[str, str], harvest.FileRef] = {}
    segment_count = 0
    for topic_word in config.topics:
        topic = harvest.TopicQuery(topic_word)
        refs, segments = harvest.collect_refs(topic, backend, page_cap=config.page_cap)
        segment_count += len(segments)
        for ref in refs:
            merged.setdefault(ref.key, ref)
    plan = list(merged.values())

    config.out.mkdir(parents=True, exist_ok=True)
    harvest.write_plan(plan, config.out / "plan.jsonl")
    raw_store = harvest.DownloadStore(config.out / "raw")
    ok, failed = harvest.download_all(plan, backend, raw_store, workers=config.workers)
    report.counts.update(
        {
            "topics": len(config.topics),
            "segments": segment_count,
            "refs_planned": len(plan),
            "downloaded": len(ok),
            "download_failed": len(failed),
        }
    )
    return plan


def _iter_parsed(config: PipelineConfig, report: RunReport, failures: list[dict]):
    """Parse every downloaded plan entry, yielding (ref, table) pairs."""
    plan_path = config.out / "plan.jsonl"
    if not plan_path.exists():
        raise ConfigError(f"{plan_path} not found; run the harvest stage first")
    plan = harvest.read_plan(plan_path)
    raw_store = harvest.DownloadStore(config.out / "raw")
    parsed = 0
    for ref in plan:
        data = raw_store.get(ref)
        if data is None:
            continue
        try:
            table = tableparse.parse_csv(data, provenance=ref)
        except TableforgeError as exc:
            failures.append(
                {"repo_id": ref.repo_id, "file_path": ref.file_path, "reason": type(exc).__name__}
            )
            continue
        parsed += 1
        yield ref, table
    report.counts["parsed"] = parsed
    report.counts["parse_failed"] = len(failures)


def run_parse(config: PipelineConfig, report: RunReport) -> list[tuple]:
    failures: list[dict] = []
    outcomes = []
    tables = []
    for ref, table in _iter_parsed(config, report, failures):
        outcomes.append(
            {
                "repo_id": ref.repo_id,
                "file_path": ref.file_path,
                "rows": table.row_count,
                "columns": table.column_count,
                "actions": [list(entry) for entry in table.parse_log],
            }
        )
        tables.append((ref, table))
    _write_jsonl(config.out / "parse_report.jsonl", outcomes)
    _write_jsonl(config.out / "parse_failures.jsonl", failures)
    return tables


def run_curate(config: PipelineConfig, report: RunReport) -> list[tuple]:
    allowlist = (
        curate.load_allowlist(config.allowlist_path)
        if config.allowlist_path
        else curate.DEFAULT_LICENSE_ALLOWLIST
    )
    kept = []
    verdicts = []
    for ref, table in run_parse(config, report):
        verdict = curate.curate_table(table, ref, allowlist)
        verdicts.append(
            {
                "repo_id": ref.repo_id,
                "file_path": ref.file_path,
                "accepted": verdict.accepted,
                "reasons": list(verdict.reasons),
            }
        )
        if verdict.accepted:
            kept.append((ref, table))
    _write_jsonl(config.out / "curation_report.jsonl", verdicts)
    report.counts["accepted"] = len(kept)
    report.counts["rejected"] = len(verdicts) - len(kept)
    return kept


def run_annotate(config: PipelineConfig, report: RunReport) -> list[tuple]:
    registries = load_registries(config)
    provider = make_provider(config)
    ann_config = annotate.AnnotationConfig(
        ontologies=list(registries.values()), provider=provider, threshold=config.threshold
    )
    annotated = []
    export_rows = []
    total = 0
    for ref, table in run_curate(config, report):
        annotations = annotate.annotate_table(table, ann_config)
        total += len(annotations)
        table_key = f"{ref.repo_id}/{ref.file_path}"
        export_rows.extend(annotate.export_annotations(table_key, table, annotations))
        annotated.append((ref, table, annotations))
    _write_jsonl(config.out / "annotations.jsonl", export_rows)
    report.counts["annotations"] = total
    return annotated


def run_store(config: PipelineConfig, report: RunReport) -> list[store.StoredTable]:
    registries = load_registries(config)
    policy = (
        curate.load_pii_policy(config.pii_policy_path)
        if config.pii_policy_path
        else curate.PiiPolicy.default()
    )
    stored = []
    anonymized_total = 0
    for ref, table, annotations in run_annotate(config, report):
        anon_table, anonymized = curate.anonymize_pii(
            table, annotations, policy, config.seed, registries=registries
        )
        anonymized_total += len(anonymized)
        meta = store.TableMetadata(
            source_url=ref.url,
            repo_id=ref.repo_id,
            file_path=ref.file_path,
            license_id=ref.license_id,
            topic=ref.topic,
            dialect=anon_table.dialect.delimiter if anon_table.dialect else ",",
            row_count=anon_table.row_count,
            column_count=anon_table.column_count,
            column_names=list(anon_table.header),
            atomic_types=list(anon_table.atomic_types),
            anonymized_columns=anonymized,
            parse_log_summary=_summarize_log(anon_table.parse_log),
            seed=config.seed,
        )
        stored.append(store.write_table(anon_table, annotations, meta, config.out / "tables"))
    store.build_manifest(config.out / "tables")
    report.counts["stored"] = len(stored)
    report.counts["anonymized_columns"] = anonymized_total
    return stored


def _summarize_log(parse_log) -> dict[str, int]:
    summary: dict[str, int] = {}
    for _, action in parse_log:
        summary[action] = summary.get(action, 0) + 1
    return summary


def run_pipeline(config: PipelineConfig, report: RunReport) -> list[store.StoredTable]:
    run_harvest(config, report)
    return run_store(config, report)
