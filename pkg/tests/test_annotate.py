from __future__ import annotations

import math

import pytest

from conftest import make_table
from tableforge.annotate import (
    AnnotationConfig,
    LabelEmbeddingIndex,
    annotate_semantic,
    annotate_syntactic,
    annotate_table,
)
from tableforge.embed import embed_phrase
from tableforge.errors import EmptyName
from tableforge.ontology import normalize_label

TOL = 1e-9


def pure_cosine(u, v) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv)


def oracle_semantic(column_name, registry, provider, threshold):
    """Exhaustive scan re-deriving the semantic annotation from scratch."""
    normalized = normalize_label(column_name)
    if not normalized or any(ch.isdigit() for ch in normalized):
        return None
    query = list(embed_phrase(normalized, provider))
    best_id, best_sim = None, None
    for t in registry:  # declaration order; strictly-greater keeps the earliest
        sim = pure_cosine(query, list(embed_phrase(t.normalized_label, provider)))
        if best_sim is None or sim > best_sim:
            best_id, best_sim = t.type_id, sim
    if best_sim is None or best_sim < threshold:
        return None
    return best_id, best_sim


def oracle_syntactic(column_name, registry):
    normalized = normalize_label(column_name)
    if not normalized or any(ch.isdigit() for ch in normalized):
        return None
    for t in registry:
        if t.normalized_label == normalized:
            return t.type_id
    return None


# --- syntactic ------------------------------------------------------------------

def test_exact_match_scores_one(dbpedia_registry):
    result = annotate_syntactic("Species", dbpedia_registry)
    assert result is not None
    assert result.type_id == "dbp/species"
    assert result.score == 1.0
    assert result.method == "syntactic"


def test_digit_names_not_annotated(dbpedia_registry):
    assert annotate_syntactic("col2", dbpedia_registry) is None


def test_unmatched_name_returns_none(dbpedia_registry):
    assert annotate_syntactic("zzz_unmatched", dbpedia_registry) is None


def test_camel_case_matches_spaced_label(schemaorg_registry):
    result = annotate_syntactic("birth_date", schemaorg_registry)
    assert result is not None
    assert result.type_id == "sdo/birthdate"


def test_shared_label_tie_breaks_to_declaration_order(schemaorg_registry):
    result = annotate_syntactic("id", schemaorg_registry)
    assert result.type_id == "sdo/id-alias"


# --- semantic -------------------------------------------------------------------

def test_verbatim_label_scores_one(dbpedia_registry, hashed_provider):
    result = annotate_semantic("species", dbpedia_registry, hashed_provider)
    assert result is not None
    assert result.type_id == "dbp/species"
    assert abs(result.score - 1.0) < 1e-6


def test_semantic_skips_digit_names(dbpedia_registry, hashed_provider):
    assert annotate_semantic("col2", dbpedia_registry, hashed_provider) is None


def test_semantic_empty_name_raises(dbpedia_registry, hashed_provider):
    with pytest.raises(EmptyName):
        annotate_semantic("  _ ", dbpedia_registry, hashed_provider)


def test_semantic_threshold_discards(dbpedia_registry, hashed_provider):
    kept = annotate_semantic("Organism Group", dbpedia_registry, hashed_provider, threshold=0.0)
    assert kept is not None
    dropped = annotate_semantic(
        "Organism Group", dbpedia_registry, hashed_provider, threshold=kept.score + 1e-6
    )
    assert dropped is None


@pytest.mark.parametrize("name", ["Organism Group", "Latin-Name", "water temp", "habitat zone"])
def test_semantic_matches_exhaustive_oracle(name, dbpedia_registry, hashed_provider):
    got = annotate_semantic(name, dbpedia_registry, hashed_provider, threshold=0.0)
    expected = oracle_semantic(name, dbpedia_registry, hashed_provider, 0.0)
    assert got is not None and expected is not None
    assert got.type_id == expected[0]
    assert abs(got.score - max(0.0, min(1.0, expected[1]))) < TOL


def test_syntactic_hit_implies_semantic_certainty(dbpedia_registry, hashed_provider):
    index = LabelEmbeddingIndex(dbpedia_registry, hashed_provider)
    for name in ("species", "birthDate", "product_id", "Element Group"):
        syntactic = annotate_syntactic(name, dbpedia_registry)
        assert syntactic is not None
        semantic = annotate_semantic(name, dbpedia_registry, hashed_provider, index=index)
        assert semantic is not None
        assert abs(semantic.score - 1.0) < 1e-6


def test_registry_scaling_leaves_argmax_unchanged(dbpedia_registry, hashed_provider):
    class Scaled:
        def __init__(self, inner, k):
            self.inner, self.k = inner, k
            self.dim = inner.dim

        def embed(self, word):
            return self.inner.embed(word) * self.k

    plain = LabelEmbeddingIndex(dbpedia_registry, hashed_provider)
    scaled = LabelEmbeddingIndex(dbpedia_registry, Scaled(hashed_provider, 37.5))
    for name in ("organism group", "water level", "latin name", "habitat"):
        assert plain.best_match(name)[0] == scaled.best_match(name)[0]


def test_threshold_monotonicity(dbpedia_registry, hashed_provider):
    table = make_table(
        ["Species", "Organism Group", "weird zebra thing", "qty"],
        [["a", "b", "c", "d"], ["e", "f", "g", "h"]],
    )
    previous = None
    for threshold in (0.3, 0.5, 0.7, 0.9):
        config = AnnotationConfig(
            ontologies=[dbpedia_registry], provider=hashed_provider, threshold=threshold
        )
        current = annotate_table(table, config)
        semantic = {(a.column_index, a.type_id, a.score) for a in current if a.method == "semantic"}
        if previous is not None:
            assert semantic <= previous
        previous = semantic


# --- table-level ----------------------------------------------------------------

def test_full_header_match_gives_full_syntactic_coverage(dbpedia_registry, hashed_provider):
    table = make_table(
        ["species", "genus", "habitat"],
        [["a", "b", "c"], ["d", "e", "f"]],
    )
    config = AnnotationConfig(ontologies=[dbpedia_registry], provider=hashed_provider)
    annotations = annotate_table(table, config)
    syntactic_cols = {a.column_index for a in annotations if a.method == "syntactic"}
    assert syntactic_cols == {0, 1, 2}


def test_empty_header_columns_get_no_annotations(dbpedia_registry, hashed_provider):
    table = make_table(["species", ""], [["a", "b"], ["c", "d"]])
    config = AnnotationConfig(ontologies=[dbpedia_registry], provider=hashed_provider)
    annotations = annotate_table(table, config)
    assert all(a.column_index == 0 for a in annotations)


def test_annotate_table_matches_oracle_multiset(
    dbpedia_registry, schemaorg_registry, hashed_provider
):
    table = make_table(
        ["Species", "Organism Group", "col3", "", "order_date", "habitat"],
        [["a"] * 6, ["b"] * 6],
    )
    config = AnnotationConfig(
        ontologies=[dbpedia_registry, schemaorg_registry],
        provider=hashed_provider,
        threshold=0.5,
    )
    got = annotate_table(table, config)

    expected = []
    for col, name in enumerate(table.header):
        for registry in (dbpedia_registry, schemaorg_registry):
            syn = oracle_syntactic(name, registry)
            if syn is not None:
                expected.append((col, registry.ontology, "syntactic", syn, 1.0))
            if normalize_label(name):
                sem = oracle_semantic(name, registry, hashed_provider, 0.5)
                if sem is not None:
                    expected.append(
                        (col, registry.ontology, "semantic", sem[0], max(0.0, min(1.0, sem[1])))
                    )
    expected.sort(key=lambda e: (e[0], e[1], e[2]))

    assert len(got) == len(expected)
    for a, (col, onto, method, type_id, score) in zip(got, expected):
        assert (a.column_index, a.ontology, a.method, a.type_id) == (col, onto, method, type_id)
        assert abs(a.score - score) < TOL


def test_annotate_table_deterministic(dbpedia_registry, hashed_provider):
    table = make_table(["species", "Organism Group"], [["a", "b"], ["c", "d"]])
    config = AnnotationConfig(ontologies=[dbpedia_registry], provider=hashed_provider)
    assert annotate_table(table, config) == annotate_table(table, config)


def test_one_annotation_per_method_ontology_pair(
    dbpedia_registry, schemaorg_registry, hashed_provider
):
    table = make_table(["name", "email"], [["a", "b"], ["c", "d"]])
    config = AnnotationConfig(
        ontologies=[dbpedia_registry, schemaorg_registry], provider=hashed_provider
    )
    annotations = annotate_table(table, config)
    keys = [(a.column_index, a.ontology, a.method) for a in annotations]
    assert len(keys) == len(set(keys))
    assert keys == sorted(keys)
