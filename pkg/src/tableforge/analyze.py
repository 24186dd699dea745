"""Corpus statistics, bias profiles, column profiles, and agreement evaluation.

Everything here is a single pass over sidecars (plus data files where
cell values are needed), merged with associative counters, so results
are independent of manifest order.
"""

from __future__ import annotations

import json
import math
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import EmptyCorpus, UnresolvedGold
from .ontology import TypeRegistry, ancestors, normalize_label
from .store import Corpus
from .tableparse import ATOMIC_TYPES, NUMERIC_RE

SIMILARITY_BIN_WIDTH = 0.05
SIMILARITY_BIN_COUNT = 20
# Threshold for the "types with more than this many annotated columns" count.
HEAVY_TYPE_COLUMN_COUNT = 1000

PROFILE_CHAR_SET = ("digits", "@", ".", "-", "_")


@dataclass
class MethodCoverage:
    tables_annotated: int = 0
    columns_annotated: int = 0
    unique_types: int = 0
    heavy_types: int = 0


@dataclass
class CorpusStats:
    table_count: int
    total_rows: int
    total_columns: int
    mean_rows: float
    median_rows: float
    mean_columns: float
    median_columns: float
    atomic_type_distribution: dict[str, int]
    tables_per_repo: dict[int, int]
    coverage: dict[str, MethodCoverage]
    similarity_histogram: list[int]

    def to_dict(self) -> dict:
        return {
            "table_count": self.table_count,
            "total_rows": self.total_rows,
            "total_columns": self.total_columns,
            "mean_rows": self.mean_rows,
            "median_rows": self.median_rows,
            "mean_columns": self.mean_columns,
            "median_columns": self.median_columns,
            "atomic_type_distribution": dict(self.atomic_type_distribution),
            "tables_per_repo": {str(k): v for k, v in sorted(self.tables_per_repo.items())},
            "coverage": {k: vars(v) for k, v in sorted(self.coverage.items())},
            "similarity_histogram": list(self.similarity_histogram),
        }


def _coverage_key(method: str, ontology: str) -> str:
    return f"{method}/{ontology}"


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """One pass over all sidecars; every statistic the reports need."""
    metas = corpus.all_metadata()
    if not metas:
        raise EmptyCorpus("corpus has no stored tables")

    rows = [m.row_count for m in metas]
    cols = [m.column_count for m in metas]
    atomic = Counter()
    repo_tables = Counter()
    histogram = [0] * SIMILARITY_BIN_COUNT
    tables_by_key = defaultdict(set)
    columns_by_key = Counter()
    types_by_key = defaultdict(set)
    type_columns = Counter()

    for meta in metas:
        for tag in meta.atomic_types:
            atomic[tag] += 1
        repo_tables[meta.repo_id] += 1
        for ann in meta.annotations:
            key = _coverage_key(ann["method"], ann["ontology"])
            tables_by_key[key].add(meta.table_id)
            columns_by_key[key] += 1
            types_by_key[key].add(ann["type_id"])
            type_columns[(key, ann["type_id"])] += 1
            if ann["method"] == "semantic":
                bin_idx = min(int(ann["score"] / SIMILARITY_BIN_WIDTH), SIMILARITY_BIN_COUNT - 1)
                histogram[bin_idx] += 1

    coverage = {}
    for key in sorted(set(tables_by_key) | set(columns_by_key)):
        heavy = sum(
            1 for (k, _), n in type_columns.items() if k == key and n > HEAVY_TYPE_COLUMN_COUNT
        )
        coverage[key] = MethodCoverage(
            tables_annotated=len(tables_by_key[key]),
            columns_annotated=columns_by_key[key],
            unique_types=len(types_by_key[key]),
            heavy_types=heavy,
        )

    per_repo = Counter(repo_tables.values())
    return CorpusStats(
        table_count=len(metas),
        total_rows=sum(rows),
        total_columns=sum(cols),
        mean_rows=sum(rows) / len(rows),
        median_rows=float(statistics.median(rows)),
        mean_columns=sum(cols) / len(cols),
        median_columns=float(statistics.median(cols)),
        atomic_type_distribution={t: atomic.get(t, 0) for t in ATOMIC_TYPES},
        tables_per_repo=dict(per_repo),
        coverage=coverage,
        similarity_histogram=histogram,
    )


def format_stats(stats: CorpusStats) -> str:
    """Human summary of a stats record."""
    lines = [
        f"tables: {stats.table_count}",
        f"rows: total {stats.total_rows}, mean {stats.mean_rows:.1f}, median {stats.median_rows:.1f}",
        f"columns: total {stats.total_columns}, mean {stats.mean_columns:.1f}, median {stats.median_columns:.1f}",
        "atomic types: "
        + ", ".join(f"{t}={n}" for t, n in stats.atomic_type_distribution.items()),
    ]
    for key, cov in sorted(stats.coverage.items()):
        lines.append(
            f"{key}: {cov.tables_annotated} tables, {cov.columns_annotated} columns, "
            f"{cov.unique_types} types ({cov.heavy_types} above {HEAVY_TYPE_COLUMN_COUNT} columns)"
        )
    return "\n".join(lines)


def top_types(corpus: Corpus, k: int, method: str, ontology: str) -> list[tuple[str, int]]:
    """Most-annotated semantic types for one (method, ontology) filter."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter()
    for meta in corpus.all_metadata():
        for ann in meta.annotations:
            if ann["method"] == method and ann["ontology"] == ontology:
                counts[ann["type_id"]] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def bias_profile(
    corpus: Corpus,
    sensitive_types: list[str],
    registry: TypeRegistry,
    alias_map: dict[str, str] | None = None,
    top_values: int = 4,
) -> dict[str, dict]:
    """Column fraction and frequent values for each sensitive type.

    ``sensitive_types`` are type labels; they resolve through the
    registry's label index to the annotated type ids.  Cell-value counts
    merge case-insensitively; by-meaning merges (``USA`` into ``United
    States``) only happen through an explicit ``alias_map``.
    """
    alias = {k.lower(): v for k, v in (alias_map or {}).items()}
    label_to_ids: dict[str, set[str]] = {}
    for label in sensitive_types:
        ids = set(registry.lookup_label(normalize_label(label)))
        if not ids:
            raise ValueError(f"sensitive type {label!r} does not resolve in the registry")
        label_to_ids[label] = ids

    annotated_columns = 0
    hit_columns = Counter()
    value_counts: dict[str, Counter] = {label: Counter() for label in sensitive_types}
    display_form: dict[str, dict[str, Counter]] = {
        label: defaultdict(Counter) for label in sensitive_types
    }

    for meta in corpus.all_metadata():
        by_column: dict[int, set[str]] = defaultdict(set)
        for ann in meta.annotations:
            by_column[ann["column_index"]].add(ann["type_id"])
        annotated_columns += len(by_column)
        table = None
        for label, ids in label_to_ids.items():
            matching = [c for c, tids in by_column.items() if tids & ids]
            if not matching:
                continue
            hit_columns[label] += len(matching)
            if table is None:
                table, _ = corpus.table(meta.table_id)
            for c in matching:
                for value in table.column(c):
                    if not value.strip():
                        continue
                    merged = alias.get(value.lower(), value)
                    key = merged.lower()
                    value_counts[label][key] += 1
                    display_form[label][key][merged] += 1

    profile = {}
    for label in sensitive_types:
        ranked = sorted(value_counts[label].items(), key=lambda kv: (-kv[1], kv[0]))
        top = []
        for key, count in ranked[:top_values]:
            forms = display_form[label][key]
            best_form = sorted(forms.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
            top.append((best_form, count))
        profile[label] = {
            "column_fraction": (hit_columns[label] / annotated_columns) if annotated_columns else 0.0,
            "top_values": top,
        }
    return profile


def column_profile(values: list[str]) -> dict[str, float]:
    """Reduced column-statistics feature record; deterministic field order."""
    n = len(values)
    record: dict[str, float] = {
        "value_count": float(n),
        "distinct_ratio": 0.0,
        "empty_fraction": 0.0,
        "numeric_fraction": 0.0,
        "mean_length": 0.0,
        "std_length": 0.0,
        "entropy": 0.0,
    }
    for char in PROFILE_CHAR_SET:
        record[f"mean_count_{char}"] = 0.0
    if n == 0:
        return record

    lengths = [len(v) for v in values]
    counts = Counter(values)
    entropy = -sum((c / n) * math.log(c / n) for c in counts.values())
    mean_len = sum(lengths) / n
    record.update(
        {
            "distinct_ratio": len(counts) / n,
            "empty_fraction": sum(1 for v in values if not v.strip()) / n,
            "numeric_fraction": sum(1 for v in values if NUMERIC_RE.match(v.strip())) / n,
            "mean_length": mean_len,
            "std_length": math.sqrt(sum((x - mean_len) ** 2 for x in lengths) / n),
            "entropy": entropy,
        }
    )
    record["mean_count_digits"] = sum(sum(ch.isdigit() for ch in v) for v in values) / n
    for char in PROFILE_CHAR_SET[1:]:
        record[f"mean_count_{char}"] = sum(v.count(char) for v in values) / n
    return record


@dataclass(frozen=True)
class GoldLabel:
    table_id: str
    column_index: int
    gold_type_id: str
    ontology: str


def load_gold_labels(path) -> list[GoldLabel]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                d = json.loads(line)
                labels.append(
                    GoldLabel(d["table_id"], int(d["column_index"]), d["gold_type_id"], d["ontology"])
                )
    return labels


@dataclass
class AgreementReport:
    per_ontology: dict[str, dict[str, float]]
    disagreements: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"per_ontology": self.per_ontology, "disagreements": self.disagreements}


def _chain_related(predicted: str, gold: str, registry: TypeRegistry) -> bool:
    # Credit flows along the super chain in either direction: a more or
    # less granular prediction than gold both count.
    if predicted == gold:
        return True
    if predicted in registry and gold in ancestors(predicted, registry):
        return True
    if gold in registry and predicted in ancestors(gold, registry):
        return True
    return False


def agreement_eval(
    corpus: Corpus,
    gold: list[GoldLabel],
    method: str,
    registries: dict[str, TypeRegistry],
    sample_values: int = 5,
) -> AgreementReport:
    """Score one annotation method against gold labels, per ontology.

    Exact agreement requires the predicted type id to equal gold;
    hierarchical credit also accepts predictions related to gold along
    the super chain.  Columns where the two differ are exported with
    sample values for manual review.
    """
    if not gold:
        raise UnresolvedGold("gold label set is empty")
    known_tables = {e.table_id for e in corpus.entries}
    for g in gold:
        if g.table_id not in known_tables:
            raise UnresolvedGold(f"gold label references unknown table {g.table_id}")

    exact = Counter()
    hierarchical = Counter()
    totals = Counter()
    disagreements: list[dict] = []

    by_table: dict[str, list[GoldLabel]] = defaultdict(list)
    for g in gold:
        by_table[g.table_id].append(g)

    for table_id, labels in sorted(by_table.items()):
        table, meta = corpus.table(table_id)
        predictions = {
            (a["column_index"], a["ontology"]): a
            for a in meta.annotations
            if a["method"] == method
        }
        for g in labels:
            if not 0 <= g.column_index < table.column_count:
                raise UnresolvedGold(
                    f"gold label column {g.column_index} out of range for {table_id}"
                )
            registry = registries.get(g.ontology)
            if registry is None or g.gold_type_id not in registry:
                raise UnresolvedGold(f"gold type {g.gold_type_id!r} unknown in {g.ontology!r}")
            totals[g.ontology] += 1
            predicted = predictions.get((g.column_index, g.ontology))
            predicted_id = predicted["type_id"] if predicted else None
            if predicted_id == g.gold_type_id:
                exact[g.ontology] += 1
                hierarchical[g.ontology] += 1
                continue
            if predicted_id is not None and _chain_related(predicted_id, g.gold_type_id, registry):
                hierarchical[g.ontology] += 1
            disagreements.append(
                {
                    "table_id": table_id,
                    "column_index": g.column_index,
                    "column_name": table.header[g.column_index],
                    "sample_values": table.column(g.column_index)[:sample_values],
                    "gold": g.gold_type_id,
                    "predicted": predicted_id,
                    "score": predicted["score"] if predicted else None,
                    "ontology": g.ontology,
                }
            )

    per_ontology = {
        tag: {
            "gold_count": totals[tag],
            "exact_agreement": exact[tag] / totals[tag],
            "hierarchical_agreement": hierarchical[tag] / totals[tag],
        }
        for tag in sorted(totals)
    }
    return AgreementReport(per_ontology=per_ontology, disagreements=disagreements)


def write_disagreements(report: AgreementReport, path) -> None:
    """Export disagreements as JSONL for the manual review protocol."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in report.disagreements:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
