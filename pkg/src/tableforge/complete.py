"""Schema completion and natural-language table search over corpus schemas.

``nearest_completions`` ranks stored schemas by the average positional
cosine distance between the first N embedded attributes of the query
prefix and of each schema; schemas shorter than the prefix have no
positional distance and are skipped (and tallied).  ``search`` ranks
whole schemas by cosine similarity against an embedded free-text query.
Both are exact brute-force scans: corpora at this scale do not need an
index, and exactness is what the tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed import cosine_distance, cosine_similarity, embed_phrase
from .errors import (
    EmptyCorpus,
    EmptyPrefix,
    EmptyQuery,
    EmptyResultRequest,
    EmptySchema,
    NoEligibleSchemas,
)
from .ontology import normalize_label
from .store import Corpus

DEFAULT_K = 10


@dataclass(frozen=True)
class SchemaPrefix:
    attributes: tuple[str, ...]

    def __post_init__(self):
        if len(self.attributes) < 1:
            raise EmptyPrefix("schema prefix needs at least one attribute")
        if any(not normalize_label(a) for a in self.attributes):
            raise EmptyPrefix("every prefix attribute must normalize to a non-empty string")

    @classmethod
    def parse(cls, text: str) -> "SchemaPrefix":
        """Comma-separated attribute list, as taken on the command line."""
        attrs = tuple(a.strip() for a in text.split(",") if a.strip())
        return cls(attrs)


@dataclass(frozen=True)
class CompletionResult:
    table_id: str
    full_schema: tuple[str, ...]
    suffix: tuple[str, ...]
    avg_prefix_distance: float

    def to_dict(self) -> dict:
        return {
            "table_id": self.table_id,
            "schema": list(self.full_schema),
            "suffix": list(self.suffix),
            "avg_prefix_distance": self.avg_prefix_distance,
        }


def _attribute_vector(attribute: str, provider) -> np.ndarray:
    return embed_phrase(normalize_label(attribute), provider)


def corpus_schemas(corpus: Corpus) -> list[tuple[str, tuple[str, ...]]]:
    """(table_id, attribute tuple) for every stored table, manifest order."""
    schemas = []
    for entry in corpus.entries:
        meta = corpus.metadata(entry.table_id)
        schemas.append((entry.table_id, tuple(meta.column_names)))
    return schemas


def nearest_completions(
    prefix: SchemaPrefix,
    schemas: list[tuple[str, tuple[str, ...]]],
    k: int = DEFAULT_K,
    provider=None,
) -> tuple[list[CompletionResult], int]:
    """The k corpus schemas nearest to the prefix, plus the skipped tally.

    Distance between the prefix and a schema is the mean positional
    cosine distance over the first N attributes.  Ascending distance,
    ties by table id.
    """
    if k < 1:
        raise EmptyResultRequest("k must be >= 1")
    n = len(prefix.attributes)
    prefix_vectors = [_attribute_vector(a, provider) for a in prefix.attributes]

    scored: list[CompletionResult] = []
    skipped = 0
    for table_id, attributes in schemas:
        if len(attributes) < n:
            skipped += 1
            continue
        total = 0.0
        for i in range(n):
            total += cosine_distance(prefix_vectors[i], _attribute_vector(attributes[i], provider))
        scored.append(
            CompletionResult(
                table_id=table_id,
                full_schema=tuple(attributes),
                suffix=tuple(attributes[n:]),
                avg_prefix_distance=total / n,
            )
        )
    if not scored:
        raise NoEligibleSchemas(f"no schema has at least {n} attributes")
    scored.sort(key=lambda r: (r.avg_prefix_distance, r.table_id))
    return scored[:k], skipped


def schema_similarity(schema_a, schema_b, provider) -> float:
    """Cosine similarity between whole-schema phrase embeddings.

    Each schema embeds as the mean token vector of its normalized
    attributes joined by spaces, so attribute order does not matter.
    """
    for schema in (schema_a, schema_b):
        if not schema:
            raise EmptySchema("cannot embed an empty schema")
    phrases = [
        " ".join(filter(None, (normalize_label(a) for a in schema)))
        for schema in (schema_a, schema_b)
    ]
    if not all(phrases):
        raise EmptySchema("schema attributes normalize to nothing")
    va = embed_phrase(phrases[0], provider)
    vb = embed_phrase(phrases[1], provider)
    return cosine_similarity(va, vb)


@dataclass(frozen=True)
class SearchHit:
    table_id: str
    score: float
    schema: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"table_id": self.table_id, "score": self.score, "schema": list(self.schema)}


def search(
    query: str,
    corpus: Corpus,
    k: int = DEFAULT_K,
    provider=None,
    schemas: list[tuple[str, tuple[str, ...]]] | None = None,
) -> list[SearchHit]:
    """Rank stored tables against a natural-language query.

    The query is treated as a one-attribute schema; scores are whole-
    schema cosine similarities, descending, ties by table id.
    """
    if k < 1:
        raise EmptyResultRequest("k must be >= 1")
    if not normalize_label(query):
        raise EmptyQuery("query normalizes to nothing")
    if schemas is None:
        schemas = corpus_schemas(corpus)
    if not schemas:
        raise EmptyCorpus("no stored tables to search")
    hits = [
        SearchHit(table_id, schema_similarity((query,), attributes, provider), tuple(attributes))
        for table_id, attributes in schemas
    ]
    hits.sort(key=lambda h: (-h.score, h.table_id))
    return hits[:k]
