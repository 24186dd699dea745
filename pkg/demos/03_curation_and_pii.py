"""Table-level quality filters and seeded PII anonymization.

Curation rejects tables that are too small, mostly unnamed, numerically
headed, social-media flavored, or unlicensed.  Columns annotated with
PII semantic types get deterministic synthetic replacements.
"""

from tableforge.annotate import Annotation
from tableforge.curate import PiiPolicy, anonymize_pii, curate_table, filter_table
from tableforge.harvest import FileRef
from tableforge.tableparse import Table

candidates = {
    "single row": Table(["a", "b"], [["1", "2"]]),
    "unnamed columns": Table(["", "", "z"], [["1", "2", "3"], ["4", "5", "6"]]),
    "numeric header": Table(["2023", "total"], [["1", "2"], ["3", "4"]]),
    "social media": Table(["user", "tweet_text"], [["a", "b"], ["c", "d"]]),
    "clean": Table(["city", "total"], [["a", "1"], ["b", "2"]]),
}
for label, table in candidates.items():
    verdict = filter_table(table)
    flag = "accept" if verdict.accepted else f"reject {list(verdict.reasons)}"
    print(f"{label:>16}: {flag}")

licensed = FileRef(url="u", repo_id="r", file_path="f.csv", size_bytes=1, license_id="mit")
unlicensed = FileRef(url="u", repo_id="r", file_path="f.csv", size_bytes=1, license_id=None)
clean = candidates["clean"]
print("\nWith a permissive license:", curate_table(clean, licensed).accepted)
print("Without a license:        ", list(curate_table(clean, unlicensed).reasons))

contacts = Table(
    ["name", "email", "plan"],
    [
        ["John Smith", "john@corp.example.org", "basic"],
        ["Mary Jones", "mary@corp.example.org", "pro"],
    ],
)
annotations = [
    Annotation(0, "name", "schemaorg", "syntactic", 1.0),
    Annotation(1, "email", "schemaorg", "syntactic", 1.0),
]
anonymized, columns = anonymize_pii(contacts, annotations, PiiPolicy.default(), seed=42)
print(f"\nAnonymized columns {columns}; same seed reproduces the same values:")
for before, after in zip(contacts.rows, anonymized.rows):
    print(f"  {before}  ->  {after}")

name_only = Table(["name", "plan"], [["John Smith", "basic"]])
_, columns = anonymize_pii(name_only, annotations[:1], PiiPolicy.default(), seed=42)
print(f"\n'name' without any co-occurring PII column stays untouched: {columns == []}")
