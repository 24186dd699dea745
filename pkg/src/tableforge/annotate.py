"""Column annotation against semantic-type registries.

Two methods, both operating on the normalized column name:

* syntactic: exact match against the registry's normalized labels,
  confidence fixed at 1.0;
* semantic: cosine argmax between the embedded column name and every
  embedded type label, kept only above a similarity threshold.

Neither method annotates column names containing digits ("col2" matching
a type that happens to contain a number is noise, not signal).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .embed import embed_phrase
from .errors import EmptyName
from .ontology import TypeRegistry, normalize_label
from .tableparse import Table

logger = logging.getLogger(__name__)

METHOD_SYNTACTIC = "syntactic"
METHOD_SEMANTIC = "semantic"

DEFAULT_THRESHOLD = 0.50


@dataclass(frozen=True)
class Annotation:
    column_index: int
    type_id: str
    ontology: str
    method: str
    score: float

    def to_dict(self) -> dict:
        return {
            "column_index": self.column_index,
            "type_id": self.type_id,
            "ontology": self.ontology,
            "method": self.method,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        return cls(
            column_index=int(d["column_index"]),
            type_id=d["type_id"],
            ontology=d["ontology"],
            method=d["method"],
            score=float(d["score"]),
        )


@dataclass
class AnnotationConfig:
    ontologies: list[TypeRegistry]
    provider: object
    threshold: float = DEFAULT_THRESHOLD
    skip_digit_names: bool = True

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")


def _has_digit(s: str) -> bool:
    return any(ch.isdigit() for ch in s)


class LabelEmbeddingIndex:
    """Frozen matrix of a registry's embedded normalized labels.

    Built once per (registry, provider) pair; rows are unit-normalized
    so scoring a column name is a single matrix-vector product.
    """

    def __init__(self, registry: TypeRegistry, provider):
        self.registry = registry
        self.provider = provider
        self.type_ids = [t.type_id for t in registry]
        vectors = np.stack([embed_phrase(t.normalized_label, provider) for t in registry])
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        self._unit = vectors / norms

    def best_match(self, phrase: str) -> tuple[str, float]:
        """Argmax cosine type for a normalized phrase.

        Exact-tie resolution falls to the earliest registry position,
        which is also the declared ontology order.
        """
        query = embed_phrase(phrase, self.provider)
        query = query / np.linalg.norm(query)
        sims = self._unit @ query
        best = int(np.argmax(sims))  # first occurrence wins on exact ties
        return self.type_ids[best], float(sims[best])


def annotate_syntactic(
    column_name: str,
    registry: TypeRegistry,
    column_index: int = 0,
    skip_digit_names: bool = True,
) -> Annotation | None:
    """Exact-match annotation on the normalized column name, score 1.0."""
    normalized = normalize_label(column_name)
    if not normalized:
        return None
    if skip_digit_names and _has_digit(normalized):
        return None
    matches = registry.lookup_label(normalized)
    if not matches:
        return None
    return Annotation(
        column_index=column_index,
        type_id=matches[0],
        ontology=registry.ontology,
        method=METHOD_SYNTACTIC,
        score=1.0,
    )


def annotate_semantic(
    column_name: str,
    registry: TypeRegistry,
    provider,
    threshold: float = DEFAULT_THRESHOLD,
    column_index: int = 0,
    skip_digit_names: bool = True,
    index: LabelEmbeddingIndex | None = None,
) -> Annotation | None:
    """Cosine-argmax annotation; returns None below the threshold."""
    normalized = normalize_label(column_name)
    if not normalized:
        raise EmptyName(f"column name {column_name!r} normalizes to empty")
    if skip_digit_names and _has_digit(normalized):
        return None
    if index is None:
        index = LabelEmbeddingIndex(registry, provider)
    type_id, similarity = index.best_match(normalized)
    if similarity < threshold:
        return None
    return Annotation(
        column_index=column_index,
        type_id=type_id,
        ontology=registry.ontology,
        method=METHOD_SEMANTIC,
        score=min(1.0, max(0.0, similarity)),
    )


def annotate_table(table: Table, config: AnnotationConfig) -> list[Annotation]:
    """Run both methods against every configured registry for every column.

    A column gets at most one annotation per (method, ontology) pair;
    per-column failures degrade to absent annotations.  Output is sorted
    by (column_index, ontology, method).
    """
    indexes = [LabelEmbeddingIndex(reg, config.provider) for reg in config.ontologies]
    annotations: list[Annotation] = []
    for col, name in enumerate(table.header):
        for registry, index in zip(config.ontologies, indexes):
            syntactic = annotate_syntactic(
                name, registry, column_index=col, skip_digit_names=config.skip_digit_names
            )
            if syntactic is not None:
                annotations.append(syntactic)
            try:
                semantic = annotate_semantic(
                    name,
                    registry,
                    config.provider,
                    config.threshold,
                    column_index=col,
                    skip_digit_names=config.skip_digit_names,
                    index=index,
                )
            except EmptyName:
                logger.debug("column %d has an empty name; skipped", col)
                semantic = None
            if semantic is not None:
                annotations.append(semantic)
    annotations.sort(key=lambda a: (a.column_index, a.ontology, a.method))
    return annotations


def export_annotations(table_id: str, table: Table, annotations: list[Annotation]) -> list[dict]:
    """Rows for the JSONL annotation export."""
    return [
        {
            "table_id": table_id,
            "column_index": a.column_index,
            "column_name": table.header[a.column_index],
            "ontology": a.ontology,
            "method": a.method,
            "type_id": a.type_id,
            "score": a.score,
        }
        for a in annotations
    ]
