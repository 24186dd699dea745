from __future__ import annotations

import json
import random

import pytest

from conftest import ann, make_table, metadata_for, store_fixture_table
from tableforge.errors import CorruptSidecar, MetadataMismatch, MissingData, MissingSidecar
from tableforge.store import (
    Corpus,
    build_manifest,
    canonical_csv_bytes,
    derive_table_id,
    load_manifest,
    parse_canonical_csv,
    read_table,
    validate_sidecar,
    write_table,
)


def test_write_basic_shape(tmp_path):
    stored, _ = store_fixture_table(
        tmp_path, ["a", "b"], [["1", "2"], ["3", "4"], ["5", "6"]]
    )
    data = stored.data_path.read_bytes()
    assert data.decode().count("\n") == 4  # header + 3 rows, LF endings
    sidecar = json.loads(stored.data_path.with_name(f"{stored.table_id}.meta.json").read_text())
    assert sidecar["row_count"] == 3
    assert sidecar["column_count"] == 2


def test_comma_cell_is_quoted(tmp_path):
    stored, _ = store_fixture_table(tmp_path, ["a", "b"], [["x,y", "2"], ["3", "4"]])
    text = stored.data_path.read_text()
    assert '"x,y"' in text


def test_canonical_form_is_comma_lf_minimal_quotes():
    table = make_table(["a", "b"], [["plain", 'quo"te'], ["multi\nline", "crlf\r\n"]])
    data = canonical_csv_bytes(table)
    header, rows = parse_canonical_csv(data)
    assert header == ["a", "b"]
    assert rows == [["plain", 'quo"te'], ["multi\nline", "crlf\r\n"]]
    assert b"\r\n\r\n" not in data  # row terminator stays LF


def test_single_empty_field_row_survives():
    table = make_table(["only"], [[""], ["x"]])
    header, rows = parse_canonical_csv(canonical_csv_bytes(table))
    assert header == ["only"]
    assert rows == [[""], ["x"]]


def test_round_trip_identity(tmp_path):
    stored, table = store_fixture_table(
        tmp_path,
        ["name", "note"],
        [["Ünïcode 🦉", "a,b"], ['say "hi"', ""], ["line\nbreak", "tab\tcell"]],
        annotations=[ann(0, "sdo/name")],
    )
    table2, meta2 = read_table(stored.table_id, tmp_path)
    assert table2.header == table.header
    assert table2.rows == table.rows
    assert meta2.table_id == stored.table_id
    assert meta2.annotations == [ann(0, "sdo/name").to_dict()]


def test_write_read_write_is_bytewise_fixpoint(tmp_path):
    rng = random.Random(99)
    alphabet = ["a", "b,c", 'd"e', "f\ng", "", "é🦉", "line\r\nbreak", " sp ", "0.5", ","]
    for case in range(60):
        cols = rng.randint(1, 5)
        rows = rng.randint(0, 6)
        header = [f"h{chr(97 + i)}" for i in range(cols)]
        body = [[rng.choice(alphabet) for _ in range(cols)] for _ in range(rows)]
        stored, table = store_fixture_table(
            tmp_path, header, body, repo=f"r{case}", path=f"t{case}.csv"
        )
        first = stored.data_path.read_bytes()
        table2, meta2 = read_table(stored.table_id, tmp_path)
        stored2 = write_table(table2, meta2.annotations, meta2, tmp_path)
        assert stored2.table_id == stored.table_id
        assert stored2.data_path.read_bytes() == first


def test_table_id_stability_and_content_sensitivity():
    data = canonical_csv_bytes(make_table(["a"], [["1"], ["2"]]))
    id1 = derive_table_id("r", "p.csv", data)
    id2 = derive_table_id("r", "p.csv", data)
    assert id1 == id2
    assert derive_table_id("r2", "p.csv", data) != id1
    assert derive_table_id("r", "other.csv", data) != id1
    other = canonical_csv_bytes(make_table(["a"], [["1"], ["3"]]))
    assert derive_table_id("r", "p.csv", other) != id1


def test_metadata_mismatch_rejected(tmp_path):
    table = make_table(["a", "b"], [["1", "2"]])
    meta = metadata_for(table)
    meta.row_count = 5
    with pytest.raises(MetadataMismatch):
        write_table(table, [], meta, tmp_path)
    assert not list(tmp_path.rglob("*.csv"))


def test_annotation_out_of_range_rejected(tmp_path):
    table = make_table(["a", "b"], [["1", "2"]])
    meta = metadata_for(table)
    with pytest.raises(MetadataMismatch):
        write_table(table, [ann(5, "sdo/name")], meta, tmp_path)


def test_no_temp_files_left_behind(tmp_path):
    store_fixture_table(tmp_path, ["a", "b"], [["1", "2"]])
    assert not list(tmp_path.rglob("*.tmp"))


def test_missing_sidecar(tmp_path):
    stored, _ = store_fixture_table(tmp_path, ["a", "b"], [["1", "2"]])
    stored.data_path.with_name(f"{stored.table_id}.meta.json").unlink()
    with pytest.raises(MissingSidecar):
        read_table(stored.table_id, tmp_path)


def test_missing_data(tmp_path):
    stored, _ = store_fixture_table(tmp_path, ["a", "b"], [["1", "2"]])
    stored.data_path.unlink()
    with pytest.raises(MissingData):
        read_table(stored.table_id, tmp_path)


def test_corrupt_sidecar_count_mismatch(tmp_path):
    stored, _ = store_fixture_table(tmp_path, ["a", "b"], [["1", "2"]])
    sidecar = stored.data_path.with_name(f"{stored.table_id}.meta.json")
    payload = json.loads(sidecar.read_text())
    payload["row_count"] = 42
    sidecar.write_text(json.dumps(payload))
    with pytest.raises(CorruptSidecar):
        read_table(stored.table_id, tmp_path)


def test_corrupt_sidecar_bad_json(tmp_path):
    stored, _ = store_fixture_table(tmp_path, ["a", "b"], [["1", "2"]])
    sidecar = stored.data_path.with_name(f"{stored.table_id}.meta.json")
    sidecar.write_text("{not json")
    with pytest.raises(CorruptSidecar):
        read_table(stored.table_id, tmp_path)


def test_sidecar_validates_against_schema(tmp_path):
    stored, _ = store_fixture_table(
        tmp_path, ["a", "b"], [["1", "2"]], annotations=[ann(0, "sdo/name")]
    )
    payload = json.loads(
        stored.data_path.with_name(f"{stored.table_id}.meta.json").read_text()
    )
    validate_sidecar(payload)  # no raise
    payload["row_count"] = -1
    with pytest.raises(CorruptSidecar):
        validate_sidecar(payload)
    del payload["row_count"]
    with pytest.raises(CorruptSidecar):
        validate_sidecar(payload)


def test_manifest_build_and_load(tmp_path):
    for i, topic in enumerate(["zoo", "art", "zoo"]):
        store_fixture_table(
            tmp_path, ["a", "b"], [["1", str(i)], ["2", "x"]],
            repo=f"r{i}", path=f"f{i}.csv", topic=topic,
        )
    entries = build_manifest(tmp_path)
    assert len(entries) == 3
    assert [e.topic for e in entries] == ["art", "zoo", "zoo"]
    assert load_manifest(tmp_path) == entries
    corpus = Corpus(tmp_path)
    assert len(corpus) == 3
    table, meta = corpus.table(entries[0].table_id)
    assert meta.topic == "art"
    assert table.row_count == entries[0].row_count


def test_manifest_rebuild_is_idempotent(tmp_path):
    store_fixture_table(tmp_path, ["a", "b"], [["1", "2"], ["3", "4"]])
    build_manifest(tmp_path)
    first = (tmp_path / "manifest.jsonl").read_bytes()
    build_manifest(tmp_path)
    assert (tmp_path / "manifest.jsonl").read_bytes() == first
