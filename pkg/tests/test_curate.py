from __future__ import annotations

import pytest

from conftest import ann, make_table
from tableforge.curate import (
    DEFAULT_LICENSE_ALLOWLIST,
    DEFAULT_PII_GENERATOR_MAP,
    PiiPolicy,
    anonymize_pii,
    check_license,
    curate_table,
    filter_table,
    load_allowlist,
    load_pii_policy,
)
from tableforge.errors import UnknownPiiType
from tableforge.harvest import FileRef


def ref_with_license(license_id):
    return FileRef(url="u", repo_id="r", file_path="f.csv", size_bytes=1, license_id=license_id)


# --- license -----------------------------------------------------------------

def test_mit_license_allowed():
    assert check_license(ref_with_license("mit")) is True
    assert check_license(ref_with_license("MIT")) is True


def test_absent_license_rejected():
    assert check_license(ref_with_license(None)) is False


def test_unknown_license_rejected():
    assert check_license(ref_with_license("proprietary-custom")) is False


def test_empty_allowlist_invalid():
    with pytest.raises(ValueError):
        check_license(ref_with_license("mit"), frozenset())


def test_load_allowlist(tmp_path):
    path = tmp_path / "allow.txt"
    path.write_text("# permissive\nMIT\napache-2.0\n\n", encoding="utf-8")
    assert load_allowlist(path) == frozenset({"mit", "apache-2.0"})


# --- structural filters --------------------------------------------------------

def test_accepts_clean_table():
    verdict = filter_table(make_table(["a", "b"], [["1", "2"], ["3", "4"]]))
    assert verdict.accepted
    assert verdict.reasons == ()


def test_too_small_one_row():
    verdict = filter_table(make_table(["a", "b"], [["1", "2"]]))
    assert verdict.reasons == ("TooSmall",)


def test_too_small_one_column():
    verdict = filter_table(make_table(["a"], [["1"], ["2"]]))
    assert verdict.reasons == ("TooSmall",)


def test_unnamed_columns_majority():
    table = make_table(["", " ", "Unnamed: 2", "x"], [["1", "2", "3", "4"], ["5", "6", "7", "8"]])
    assert filter_table(table).reasons == ("UnnamedColumns",)


def test_unnamed_columns_exactly_half_is_fine():
    table = make_table(["", "x"], [["1", "2"], ["3", "4"]])
    assert filter_table(table).accepted


def test_non_string_header():
    table = make_table(["2021", "name"], [["1", "2"], ["3", "4"]])
    assert filter_table(table).reasons == ("NonStringHeader",)
    floaty = make_table(["3.5", "name"], [["1", "2"], ["3", "4"]])
    assert filter_table(floaty).reasons == ("NonStringHeader",)


def test_blocked_content_names():
    table = make_table(["id", "tweet_text"], [["1", "2"], ["3", "4"]])
    assert filter_table(table).reasons == ("BlockedContent",)
    for name in ("MyTwitterCol", "REDDIT_SCORE", "facebook likes"):
        t = make_table(["ok", name], [["1", "2"], ["3", "4"]])
        assert filter_table(t).reasons == ("BlockedContent",), name


def test_reasons_accumulate_sorted():
    table = make_table(["7"], [["1"]])
    verdict = filter_table(table)
    assert verdict.reasons == ("NonStringHeader", "TooSmall")
    assert not verdict.accepted


def test_curate_table_adds_no_license():
    table = make_table(["a", "b"], [["1", "2"], ["3", "4"]])
    verdict = curate_table(table, ref_with_license(None))
    assert verdict.reasons == ("NoLicense",)
    ok = curate_table(table, ref_with_license("mit"))
    assert ok.accepted


def test_verdict_deterministic():
    table = make_table(["tweet", "8"], [["1", "2"]])
    first = curate_table(table, ref_with_license(None))
    second = curate_table(table, ref_with_license(None))
    assert first == second
    assert first.reasons == ("BlockedContent", "NoLicense", "NonStringHeader", "TooSmall")


# --- PII anonymization ---------------------------------------------------------

def pii_table():
    return make_table(
        ["name", "email", "note"],
        [
            ["John Smith", "js@real.test", "keep"],
            ["Mary Jones", "mj@real.test", "this"],
        ],
    )


def pii_annotations():
    return [
        ann(0, "name", method="syntactic"),
        ann(1, "email", method="syntactic"),
    ]


def test_default_policy_mirrors_reference_mapping():
    policy = PiiPolicy.default()
    assert policy.generator_map == DEFAULT_PII_GENERATOR_MAP
    assert DEFAULT_PII_GENERATOR_MAP["person"] == "name"
    assert DEFAULT_PII_GENERATOR_MAP["birth date"] == "date"
    assert DEFAULT_PII_GENERATOR_MAP["home location"] == "city"
    assert DEFAULT_PII_GENERATOR_MAP["birth place"] == "postcode"
    assert DEFAULT_PII_GENERATOR_MAP["postal code"] == "city"
    assert policy.name_needs_cooccurrence is True


def test_email_column_replaced_original_absent():
    table = pii_table()
    result, anonymized = anonymize_pii(table, pii_annotations(), PiiPolicy.default(), seed=7)
    assert anonymized == [0, 1]
    for col in (0, 1):
        assert not set(table.column(col)) & set(result.column(col))
    assert result.column(2) == table.column(2)


def test_name_only_table_unchanged():
    table = make_table(["name", "note"], [["John Smith", "x"], ["Mary Jones", "y"]])
    result, anonymized = anonymize_pii(
        table, [ann(0, "name")], PiiPolicy.default(), seed=7
    )
    assert anonymized == []
    assert result.rows == table.rows


def test_two_name_columns_still_unchanged():
    table = make_table(["name", "person name"], [["a", "b"], ["c", "d"]])
    anns = [ann(0, "name"), ann(1, "name")]
    result, anonymized = anonymize_pii(table, anns, PiiPolicy.default(), seed=7)
    assert anonymized == []
    assert result.rows == table.rows


def test_name_with_cooccurring_pii_is_replaced():
    table = pii_table()
    result, anonymized = anonymize_pii(table, pii_annotations(), PiiPolicy.default(), seed=3)
    assert 0 in anonymized
    assert "John Smith" not in result.column(0)


def test_same_seed_bitwise_identical():
    one, _ = anonymize_pii(pii_table(), pii_annotations(), PiiPolicy.default(), seed=11)
    two, _ = anonymize_pii(pii_table(), pii_annotations(), PiiPolicy.default(), seed=11)
    assert one.rows == two.rows


def test_different_seed_differs():
    one, _ = anonymize_pii(pii_table(), pii_annotations(), PiiPolicy.default(), seed=11)
    two, _ = anonymize_pii(pii_table(), pii_annotations(), PiiPolicy.default(), seed=12)
    assert one.rows != two.rows


def test_shape_and_untouched_columns_preserved():
    table = pii_table()
    result, _ = anonymize_pii(table, pii_annotations(), PiiPolicy.default(), seed=5)
    assert result.header == table.header
    assert result.row_count == table.row_count
    assert result.column_count == table.column_count
    assert result.atomic_types == table.atomic_types
    assert result.column(2) == table.column(2)


def test_registry_resolves_type_ids(schemaorg_registry):
    table = pii_table()
    anns = [
        ann(0, "sdo/name", method="syntactic"),
        ann(1, "sdo/email", method="syntactic"),
    ]
    result, anonymized = anonymize_pii(
        table, anns, PiiPolicy.default(), seed=2, registries={"schemaorg": schemaorg_registry}
    )
    assert anonymized == [0, 1]
    assert "John Smith" not in result.column(0)


def test_unknown_generator_raises():
    policy = PiiPolicy(pii_types=("name", "email"), generator_map={"name": "name"})
    with pytest.raises(UnknownPiiType):
        anonymize_pii(pii_table(), pii_annotations(), policy, seed=1)


def test_annotation_out_of_range_rejected():
    with pytest.raises(ValueError):
        anonymize_pii(pii_table(), [ann(9, "email")], PiiPolicy.default(), seed=1)


def test_load_pii_policy(tmp_path):
    path = tmp_path / "policy.json"
    path.write_text('{"email": "email", "Birth_Date": "date"}', encoding="utf-8")
    policy = load_pii_policy(path)
    assert policy.generator_map == {"email": "email", "birth date": "date"}


def test_leak_freedom_over_seeds():
    table = pii_table()
    for seed in range(50):
        result, _ = anonymize_pii(table, pii_annotations(), PiiPolicy.default(), seed=seed)
        for col in (0, 1):
            assert not set(table.column(col)) & set(result.column(col))
