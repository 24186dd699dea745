"""Persist curated, annotated tables and read them back losslessly.

On disk a stored table is a pair under ``<root>/<topic>/``:

* ``<table_id>.csv`` — canonical RFC-4180 data: UTF-8, comma delimiter
  regardless of the source dialect, LF line endings, fields quoted only
  when they need it;
* ``<table_id>.meta.json`` — canonical JSON sidecar (sorted keys) with
  the full provenance, typing, and annotation record.

``table_id`` is derived from (repo, path, content hash), so identical
inputs land on identical ids across runs, and writes go through a
temp-file rename so interrupted runs never leave partial files at the
final paths.  ``manifest.jsonl`` at the root lists every stored table.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import CorruptSidecar, MetadataMismatch, MissingData, MissingSidecar
from .tableparse import Table

PIPELINE_VERSION = "0.1.0"

_NEEDS_QUOTE = re.compile(r'[",\r\n]')
_TOPIC_SAFE = re.compile(r"[^A-Za-z0-9._-]")


@dataclass
class TableMetadata:
    source_url: str
    repo_id: str
    file_path: str
    license_id: str | None
    topic: str
    dialect: str
    row_count: int
    column_count: int
    column_names: list[str]
    atomic_types: list[str]
    annotations: list[dict] = field(default_factory=list)
    anonymized_columns: list[int] = field(default_factory=list)
    parse_log_summary: dict[str, int] = field(default_factory=dict)
    pipeline_version: str = PIPELINE_VERSION
    seed: int = 0
    table_id: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TableMetadata":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class StoredTable:
    table_id: str
    data_path: Path
    meta: TableMetadata


def _csv_field(value: str) -> str:
    if _NEEDS_QUOTE.search(value):
        return '"' + value.replace('"', '""') + '"'
    return value


def _csv_line(fields: list[str]) -> str:
    # A lone empty field would serialize to a blank line, which CSV
    # readers drop; quote it so the row survives the round trip.
    if len(fields) == 1 and fields[0] == "":
        return '""'
    return ",".join(_csv_field(f) for f in fields)


def canonical_csv_bytes(table: Table) -> bytes:
    lines = [_csv_line(table.header)]
    lines.extend(_csv_line(row) for row in table.rows)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_canonical_csv(data: bytes) -> tuple[list[str], list[list[str]]]:
    reader = csv.reader(io.StringIO(data.decode("utf-8"), newline=""), delimiter=",", quotechar='"')
    records = list(reader)
    if not records:
        raise MissingData("data file is empty")
    return records[0], records[1:]


def derive_table_id(repo_id: str, file_path: str, content: bytes) -> str:
    content_hash = hashlib.sha256(content).hexdigest()
    digest = hashlib.sha256(f"{repo_id}\x00{file_path}\x00{content_hash}".encode()).hexdigest()
    return digest[:16]


def topic_dir_name(topic: str) -> str:
    return _TOPIC_SAFE.sub("_", topic) or "untagged"


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def canonical_json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def write_table(table: Table, annotations, meta: TableMetadata, root_dir) -> StoredTable:
    """Write the canonical CSV + sidecar pair; atomic, content-addressed."""
    table.validate()
    if meta.row_count != table.row_count or meta.column_count != table.column_count:
        raise MetadataMismatch(
            f"metadata says {meta.row_count}x{meta.column_count}, "
            f"table is {table.row_count}x{table.column_count}"
        )
    if meta.column_names != table.header:
        raise MetadataMismatch("metadata column names disagree with the table header")
    ann_dicts = [a.to_dict() if hasattr(a, "to_dict") else dict(a) for a in annotations]
    for ann in ann_dicts:
        if not 0 <= ann["column_index"] < table.column_count:
            raise MetadataMismatch(f"annotation column {ann['column_index']} out of range")

    data = canonical_csv_bytes(table)
    table_id = derive_table_id(meta.repo_id, meta.file_path, data)
    meta.annotations = ann_dicts
    meta.table_id = table_id

    out_dir = Path(root_dir) / topic_dir_name(meta.topic)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / f"{table_id}.csv"
    _atomic_write(data_path, data)
    _atomic_write(out_dir / f"{table_id}.meta.json", canonical_json_bytes(meta.to_dict()))
    return StoredTable(table_id=table_id, data_path=data_path, meta=meta)


def _find_sidecar(table_id: str, root: Path) -> Path | None:
    hits = sorted(root.glob(f"*/{table_id}.meta.json"))
    return hits[0] if hits else None


def read_table(table_id: str, root_dir) -> tuple[Table, TableMetadata]:
    """Reconstruct a stored table, verifying the sidecar against the data."""
    root = Path(root_dir)
    sidecar_path = _find_sidecar(table_id, root)
    if sidecar_path is None:
        raise MissingSidecar(f"no sidecar for table {table_id}")
    data_path = sidecar_path.with_name(f"{table_id}.csv")
    if not data_path.exists():
        raise MissingData(f"no data file for table {table_id}")
    try:
        payload = json.loads(sidecar_path.read_text(encoding="utf-8"))
        meta = TableMetadata.from_dict(payload)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CorruptSidecar(f"{sidecar_path}: {exc}") from None

    header, rows = parse_canonical_csv(data_path.read_bytes())
    if meta.table_id != table_id:
        raise CorruptSidecar(f"{sidecar_path}: sidecar id {meta.table_id!r} != {table_id!r}")
    if meta.row_count != len(rows) or meta.column_count != len(header):
        raise CorruptSidecar(
            f"{sidecar_path}: sidecar says {meta.row_count}x{meta.column_count}, "
            f"data is {len(rows)}x{len(header)}"
        )
    if meta.column_names != header:
        raise CorruptSidecar(f"{sidecar_path}: column names disagree with data header")
    table = Table(header=header, rows=rows, atomic_types=list(meta.atomic_types))
    table.validate()
    return table, meta


# --- manifest ----------------------------------------------------------------

MANIFEST_NAME = "manifest.jsonl"


@dataclass(frozen=True)
class ManifestEntry:
    table_id: str
    topic: str
    data_path: str
    row_count: int
    column_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def build_manifest(root_dir) -> list[ManifestEntry]:
    """Scan sidecars and (re)write manifest.jsonl; deterministic order."""
    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for sidecar in sorted(root.glob("*/*.meta.json")):
        payload = json.loads(sidecar.read_text(encoding="utf-8"))
        entries.append(
            ManifestEntry(
                table_id=payload["table_id"],
                topic=payload["topic"],
                data_path=str(sidecar.with_suffix("").with_suffix(".csv").relative_to(root)),
                row_count=payload["row_count"],
                column_count=payload["column_count"],
            )
        )
    entries.sort(key=lambda e: (e.topic, e.table_id))
    lines = "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in entries)
    _atomic_write(root / MANIFEST_NAME, lines.encode("utf-8"))
    return entries


def load_manifest(root_dir) -> list[ManifestEntry]:
    path = Path(root_dir) / MANIFEST_NAME
    if not path.exists():
        return build_manifest(root_dir)
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            entries.append(ManifestEntry(**{k: d[k] for k in ManifestEntry.__dataclass_fields__}))
    return entries


def sidecar_schema() -> dict:
    """The published JSON schema sidecars must validate against."""
    schema_path = Path(__file__).parent / "schemas" / "table_meta.schema.json"
    return json.loads(schema_path.read_text(encoding="utf-8"))


def validate_sidecar(payload: dict) -> None:
    """Raise CorruptSidecar when a sidecar violates the published schema."""
    import jsonschema

    try:
        jsonschema.validate(payload, sidecar_schema())
    except jsonschema.ValidationError as exc:
        raise CorruptSidecar(str(exc)) from None


class Corpus:
    """Read-side handle over a store root: manifest plus lazy sidecar access."""

    def __init__(self, root_dir):
        self.root = Path(root_dir)
        self.entries = load_manifest(self.root)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def metadata(self, table_id: str) -> TableMetadata:
        sidecar = _find_sidecar(table_id, self.root)
        if sidecar is None:
            raise MissingSidecar(f"no sidecar for table {table_id}")
        return TableMetadata.from_dict(json.loads(sidecar.read_text(encoding="utf-8")))

    def table(self, table_id: str) -> tuple[Table, TableMetadata]:
        return read_table(table_id, self.root)

    def all_metadata(self) -> list[TableMetadata]:
        return [self.metadata(e.table_id) for e in self.entries]
