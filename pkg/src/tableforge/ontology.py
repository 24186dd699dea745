"""Semantic-type registries and the shared label-normalization rules.

A registry is loaded from a JSON-lines intake file, one type per line:

    {"id": "dbp/birth-date", "ontology": "dbpedia", "label": "birthDate",
     "atomic_type": "Date", "domains": ["Person"], "super": "dbp/date",
     "description": "..."}

``label``, after :func:`normalize_label`, feeds the registry's label
index.  Several types may share one normalized label (this happens in
real ontologies); the index therefore maps to lists, preserving the
order types were declared in, and downstream annotators break ties by
that order then by type id.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import DanglingSuper, DuplicateTypeId, MalformedRecord, SuperCycle, UnknownType

ONTOLOGY_TAGS = ("dbpedia", "schemaorg", "custom")

_SEPARATORS = re.compile(r"[_\-]+")
_LOWER_UPPER = re.compile(r"(?<=[a-z])(?=[A-Z])")
_UPPER_RUN = re.compile(r"(?<=[A-Z])(?=[A-Z][a-z])")
_WHITESPACE = re.compile(r"\s+")


def normalize_label(s: str) -> str:
    """Normalize an ontology label or column name for matching.

    Underscores and hyphens become spaces, camel-case boundaries are
    split (including the trailing word of an uppercase run, so
    ``HTTPStatus`` -> ``http status``), everything is lowercased and
    whitespace is collapsed.  Idempotent.
    """
    s = _SEPARATORS.sub(" ", s)
    s = _LOWER_UPPER.sub(" ", s)
    s = _UPPER_RUN.sub(" ", s)
    return _WHITESPACE.sub(" ", s.lower()).strip()


@dataclass(frozen=True)
class SemanticType:
    """One ontology property/class usable as a column annotation target."""

    type_id: str
    ontology: str
    label: str
    atomic_type: str | None = None
    domains: tuple[str, ...] = ()
    super_id: str | None = None
    description: str | None = None

    @property
    def normalized_label(self) -> str:
        return normalize_label(self.label)


class TypeRegistry:
    """Immutable, ordered collection of semantic types with a label index."""

    def __init__(self, types: list[SemanticType], ontology: str = "custom"):
        self.ontology = ontology
        self._types: list[SemanticType] = list(types)
        self._by_id: dict[str, SemanticType] = {}
        self._positions: dict[str, int] = {}
        self.label_index: dict[str, list[str]] = {}
        for i, t in enumerate(self._types):
            if t.type_id in self._by_id:
                raise DuplicateTypeId(f"duplicate type id {t.type_id!r}")
            self._by_id[t.type_id] = t
            self._positions[t.type_id] = i
        for t in self._types:
            if t.super_id is not None and t.super_id not in self._by_id:
                raise DanglingSuper(f"{t.type_id!r} points to unknown super {t.super_id!r}")
            norm = t.normalized_label
            if not norm:
                raise MalformedRecord(f"{t.type_id!r} has an empty normalized label")
            self.label_index.setdefault(norm, []).append(t.type_id)

    def __len__(self) -> int:
        return len(self._types)

    def __iter__(self):
        return iter(self._types)

    def __contains__(self, type_id: str) -> bool:
        return type_id in self._by_id

    def get(self, type_id: str) -> SemanticType:
        try:
            return self._by_id[type_id]
        except KeyError:
            raise UnknownType(f"unknown type id {type_id!r}") from None

    def position(self, type_id: str) -> int:
        """Declaration order of a type; used as the annotation tie-break."""
        self.get(type_id)
        return self._positions[type_id]

    def lookup_label(self, normalized: str) -> list[str]:
        return list(self.label_index.get(normalized, []))


def ancestors(type_id: str, registry: TypeRegistry) -> list[str]:
    """Super-chain of a type, nearest first, excluding the type itself."""
    current = registry.get(type_id)
    chain: list[str] = []
    seen = {type_id}
    while current.super_id is not None:
        if current.super_id in seen:
            raise SuperCycle(f"super cycle through {current.super_id!r}")
        chain.append(current.super_id)
        seen.add(current.super_id)
        current = registry.get(current.super_id)
    return chain


def _record_to_type(record: dict, default_ontology: str, line_no: int) -> SemanticType:
    if not isinstance(record, dict):
        raise MalformedRecord(f"line {line_no}: record is not an object", line_no)
    try:
        type_id = record["id"]
        label = record["label"]
    except KeyError as exc:
        raise MalformedRecord(f"line {line_no}: missing field {exc}", line_no) from None
    if not isinstance(type_id, str) or not isinstance(label, str) or not type_id:
        raise MalformedRecord(f"line {line_no}: id and label must be non-empty strings", line_no)
    return SemanticType(
        type_id=type_id,
        ontology=record.get("ontology", default_ontology),
        label=label,
        atomic_type=record.get("atomic_type"),
        domains=tuple(record.get("domains", ())),
        super_id=record.get("super"),
        description=record.get("description"),
    )


def load_registry(path, ontology_tag: str = "custom") -> TypeRegistry:
    """Load a registry from a JSONL intake file, validating as it goes."""
    types: list[SemanticType] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"line {line_no}: {exc}", line_no) from None
            types.append(_record_to_type(record, ontology_tag, line_no))
    return TypeRegistry(types, ontology=ontology_tag)


def save_registry(registry: TypeRegistry, path) -> None:
    """Serialize a registry back to the JSONL intake format."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in registry:
            record: dict = {"id": t.type_id, "ontology": t.ontology, "label": t.label}
            if t.atomic_type is not None:
                record["atomic_type"] = t.atomic_type
            if t.domains:
                record["domains"] = list(t.domains)
            if t.super_id is not None:
                record["super"] = t.super_id
            if t.description is not None:
                record["description"] = t.description
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
