"""Profiling a stored corpus: dimensions, types, coverage, bias, features.

Builds a small store on disk, then computes the statistics reports the
toolkit ships: corpus stats, top types, a bias profile over sensitive
semantic types, and per-column feature records.
"""

import tempfile
from pathlib import Path

from tableforge.analyze import bias_profile, column_profile, corpus_stats, format_stats, top_types
from tableforge.annotate import Annotation
from tableforge.harvest import FileRef
from tableforge.ontology import SemanticType, TypeRegistry
from tableforge.store import Corpus, TableMetadata, build_manifest, write_table
from tableforge.tableparse import Table, infer_atomic_types

root = Path(tempfile.mkdtemp(prefix="tableforge_demo_"))

registry = TypeRegistry(
    [
        SemanticType("x/country", "custom", "country"),
        SemanticType("x/gender", "custom", "gender"),
        SemanticType("x/amount", "custom", "amount"),
    ],
    ontology="custom",
)

tables = [
    ("survey/geo", "geo.csv", ["country", "respondents"],
     [["United States", "120"], ["United States", "80"], ["Canada", "30"], ["USA", "15"]],
     [Annotation(0, "x/country", "custom", "semantic", 0.91)]),
    ("survey/people", "people.csv", ["gender", "count"],
     [["Male", "50"], ["Female", "48"], ["F", "2"]],
     [Annotation(0, "x/gender", "custom", "semantic", 0.88)]),
    ("shop/sales", "sales.csv", ["sku", "amount"],
     [["a-1", "10.5"], ["a-2", "11.0"], ["a-3", "9.75"]],
     [Annotation(1, "x/amount", "custom", "semantic", 0.84)]),
]
for repo, path, header, rows, annotations in tables:
    table = infer_atomic_types(Table(header, rows))
    ref = FileRef(url=f"sim://{repo}/{path}", repo_id=repo, file_path=path,
                  size_bytes=1, license_id="mit", topic="demo")
    meta = TableMetadata(
        source_url=ref.url, repo_id=repo, file_path=path, license_id="mit",
        topic="demo", dialect=",", row_count=table.row_count,
        column_count=table.column_count, column_names=list(table.header),
        atomic_types=list(table.atomic_types),
    )
    write_table(table, annotations, meta, root)
build_manifest(root)
corpus = Corpus(root)

print(format_stats(corpus_stats(corpus)))

print("\nTop semantic types:", top_types(corpus, 3, "semantic", "custom"))

profile = bias_profile(corpus, ["country", "gender"], registry,
                       alias_map={"USA": "United States"})
print("\nBias profile (alias map merges USA into United States):")
for label, record in profile.items():
    print(f"  {label}: fraction {record['column_fraction']:.2f}, top {record['top_values']}")

print("\nColumn feature record for the amounts column:")
for key, value in column_profile(["10.5", "11.0", "9.75"]).items():
    print(f"  {key:>18}: {value:.4f}")
