from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from tableforge.annotate import Annotation
from tableforge.embed import HashedNgramProvider, VectorFileProvider
from tableforge.harvest import MAX_FILE_SIZE, FileRef
from tableforge.ontology import load_registry
from tableforge.store import TableMetadata, write_table
from tableforge.tableparse import Table, infer_atomic_types

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def hashed_provider():
    return HashedNgramProvider()


@pytest.fixture(scope="session")
def vec_provider():
    return VectorFileProvider(FIXTURES / "vectors_mini.vec")


@pytest.fixture(scope="session")
def dbpedia_registry():
    return load_registry(FIXTURES / "registry_dbpedia.jsonl", "dbpedia")


@pytest.fixture(scope="session")
def schemaorg_registry():
    return load_registry(FIXTURES / "registry_schemaorg.jsonl", "schemaorg")


@pytest.fixture(scope="session")
def parse_oracle():
    return json.loads((FIXTURES / "csv_corpus_oracle.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def csv_corpus_dir():
    return FIXTURES / "csv_corpus"


def make_table(header, rows, topic="things", repo="org/repo", path="data.csv",
               license_id="mit", typed=True) -> Table:
    ref = FileRef(
        url=f"sim://{repo}/{path}",
        repo_id=repo,
        file_path=path,
        size_bytes=1,
        license_id=license_id,
        topic=topic,
    )
    table = Table(header=list(header), rows=[list(r) for r in rows], provenance=ref)
    table.validate()
    return infer_atomic_types(table) if typed else table


def metadata_for(table: Table, seed: int = 0, topic=None) -> TableMetadata:
    ref = table.provenance
    return TableMetadata(
        source_url=ref.url if ref else "",
        repo_id=ref.repo_id if ref else "r",
        file_path=ref.file_path if ref else "f.csv",
        license_id=ref.license_id if ref else None,
        topic=topic if topic is not None else (ref.topic if ref else "misc"),
        dialect=",",
        row_count=table.row_count,
        column_count=table.column_count,
        column_names=list(table.header),
        atomic_types=list(table.atomic_types),
        seed=seed,
    )


def store_fixture_table(root, header, rows, annotations=(), repo="org/repo",
                        path="data.csv", topic="things", seed=0):
    table = make_table(header, rows, topic=topic, repo=repo, path=path)
    meta = metadata_for(table, seed=seed)
    return write_table(table, list(annotations), meta, root), table


def ann(col, type_id, ontology="schemaorg", method="syntactic", score=1.0) -> Annotation:
    return Annotation(column_index=col, type_id=type_id, ontology=ontology,
                      method=method, score=score)


def make_uniform_index(n=100_000, seed=4242, topic="data"):
    """Synthetic search-index records with sizes spread over the whole domain."""
    rng = random.Random(seed)
    return [
        {
            "repo": f"repo{i % 997}",
            "path": f"dir{i % 31}/file{i}.csv",
            "size": rng.randrange(0, MAX_FILE_SIZE + 1),
            "license": "mit" if i % 3 else None,
            "contains": [topic],
        }
        for i in range(n)
    ]
