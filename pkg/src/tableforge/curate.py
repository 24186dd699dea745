"""Table-level curation filters and seeded PII anonymization.

A table is kept only when it clears every filter: a redistributable
license, at least 2x2 cells, mostly-named string headers, and no
social-media column names.  Columns annotated with PII semantic types
get their values replaced by synthetic ones; replacements are drawn
from invented-word namespaces and re-drawn on any collision with the
column's original values, so anonymized output never leaks an original
value.  Streams are seeded per (seed, column), making output
independent of processing order.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, replace

from .errors import UnknownPiiType
from .harvest import FileRef
from .ontology import normalize_label
from .tableparse import NUMERIC_RE, Table

REASON_NO_LICENSE = "NoLicense"
REASON_TOO_SMALL = "TooSmall"
REASON_UNNAMED_COLUMNS = "UnnamedColumns"
REASON_NON_STRING_HEADER = "NonStringHeader"
REASON_BLOCKED_CONTENT = "BlockedContent"

REJECT_REASONS = (
    REASON_NO_LICENSE,
    REASON_TOO_SMALL,
    REASON_UNNAMED_COLUMNS,
    REASON_NON_STRING_HEADER,
    REASON_BLOCKED_CONTENT,
)

DEFAULT_LICENSE_ALLOWLIST = frozenset(
    {
        "mit",
        "apache-2.0",
        "bsd-2-clause",
        "bsd-3-clause",
        "0bsd",
        "cc0-1.0",
        "cc-by-4.0",
        "unlicense",
        "isc",
    }
)

BLOCKED_NAME_SUBSTRINGS = ("twitter", "tweet", "reddit", "facebook")

_UNNAMED_RE = re.compile(r"^unnamed([:_ ]\s*\d+)?$", re.IGNORECASE)


@dataclass(frozen=True)
class CurationVerdict:
    accepted: bool
    reasons: tuple[str, ...]

    @staticmethod
    def from_reasons(reasons) -> "CurationVerdict":
        ordered = tuple(sorted(set(reasons)))
        return CurationVerdict(accepted=not ordered, reasons=ordered)


def load_allowlist(path) -> frozenset[str]:
    """Newline-delimited license ids; blank lines and # comments ignored."""
    entries = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                entries.add(line.lower())
    return frozenset(entries)


def check_license(ref: FileRef, allowlist: frozenset[str] = DEFAULT_LICENSE_ALLOWLIST) -> bool:
    """True iff the ref carries a license and it is in the allowlist."""
    if not allowlist:
        raise ValueError("license allowlist must not be empty")
    return ref.license_id is not None and ref.license_id.lower() in allowlist


def _is_unspecified(name: str) -> bool:
    return not name.strip() or bool(_UNNAMED_RE.match(name.strip()))


def filter_table(table: Table) -> CurationVerdict:
    """Apply the four structural filters, accumulating every firing reason."""
    reasons = []
    if table.row_count < 2 or table.column_count < 2:
        reasons.append(REASON_TOO_SMALL)
    unspecified = sum(1 for name in table.header if _is_unspecified(name))
    if unspecified > table.column_count / 2:
        reasons.append(REASON_UNNAMED_COLUMNS)
    if any(NUMERIC_RE.match(name.strip()) for name in table.header):
        reasons.append(REASON_NON_STRING_HEADER)
    if any(
        blocked in name.lower() for name in table.header for blocked in BLOCKED_NAME_SUBSTRINGS
    ):
        reasons.append(REASON_BLOCKED_CONTENT)
    return CurationVerdict.from_reasons(reasons)


def curate_table(
    table: Table,
    ref: FileRef | None,
    allowlist: frozenset[str] = DEFAULT_LICENSE_ALLOWLIST,
) -> CurationVerdict:
    """License check plus the structural filters; the full accept/reject call."""
    reasons = list(filter_table(table).reasons)
    if ref is None or not check_license(ref, allowlist):
        reasons.append(REASON_NO_LICENSE)
    return CurationVerdict.from_reasons(reasons)


# --- PII anonymization -------------------------------------------------------

PII_NAME_TYPE = "name"

# Mirrors the shipped policy: PII semantic-type label -> generator category.
DEFAULT_PII_GENERATOR_MAP = {
    "name": "name",
    "address": "address",
    "person": "name",
    "email": "email",
    "birth date": "date",
    "home location": "city",
    "birth place": "postcode",
    "postal code": "city",
}


@dataclass(frozen=True)
class PiiPolicy:
    pii_types: tuple[str, ...]
    generator_map: dict[str, str]
    name_needs_cooccurrence: bool = True

    @staticmethod
    def default() -> "PiiPolicy":
        return PiiPolicy(
            pii_types=tuple(DEFAULT_PII_GENERATOR_MAP),
            generator_map=dict(DEFAULT_PII_GENERATOR_MAP),
        )


def load_pii_policy(path) -> PiiPolicy:
    """Policy file is a flat JSON object: type label -> generator category."""
    mapping = json.loads(open(path, encoding="utf-8").read())
    if not isinstance(mapping, dict):
        raise ValueError(f"{path}: policy must be a JSON object")
    normalized = {normalize_label(k): v for k, v in mapping.items()}
    return PiiPolicy(pii_types=tuple(normalized), generator_map=normalized)


# Invented, non-dictionary word stock: synthetic values assembled from
# these cannot collide with plausible real data, and an explicit
# re-draw-on-collision loop makes disjointness unconditional.
_SYNTH_WORDS = (
    "vexun", "norbel", "quilzar", "dravim", "ostref", "blenqua", "tarvok", "melgrin",
    "zorbut", "fenwip", "cradlow", "yintrel", "hubraz", "skelvon", "plirram", "gontor",
)
_SYNTH_SURNAMES = (
    "Vornblatt", "Quistrem", "Drelbax", "Mintrovo", "Zarquel", "Febwick", "Olstrand",
    "Brenvick", "Taxolim", "Welgrave", "Nubertal", "Croswynd", "Helvorn", "Jaltrem",
)
_STREET_SUFFIXES = ("Way", "Crossing", "Hollow", "Terrace")
_CITY_SUFFIXES = ("ville", "burg", "holm", "ford")


def _synth_value(category: str, rng: random.Random) -> str:
    word = rng.choice(_SYNTH_WORDS)
    if category == "name":
        return f"{word.capitalize()} {rng.choice(_SYNTH_SURNAMES)}"
    if category == "address":
        return f"{rng.randrange(1, 9999)} {word.capitalize()} {rng.choice(_STREET_SUFFIXES)}"
    if category == "email":
        return f"{word}{rng.randrange(100, 999)}@{rng.choice(_SYNTH_WORDS)}.example"
    if category == "date":
        # Future-dated namespace: never plausible as historical data.
        return f"{2100 + rng.randrange(100)}-{rng.randrange(1, 13):02d}-{rng.randrange(1, 29):02d}"
    if category == "city":
        return f"{word.capitalize()}{rng.choice(_CITY_SUFFIXES)}"
    if category == "postcode":
        return f"ZZ{rng.randrange(0, 100000):05d}"
    raise UnknownPiiType(f"no generator for category {category!r}")


def _fresh_value(category: str, rng: random.Random, forbidden: frozenset[str]) -> str:
    candidate = _synth_value(category, rng)
    attempts = 0
    while candidate in forbidden and attempts < 1000:
        candidate = _synth_value(category, rng)
        attempts += 1
    while candidate in forbidden:
        candidate += "-x"
    return candidate


def _pii_labels_for_column(annotations, column_index: int, policy: PiiPolicy, registries) -> list[str]:
    pii_set = {normalize_label(t) for t in policy.pii_types}
    labels = set()
    for ann in annotations:
        if ann.column_index != column_index:
            continue
        candidates = {normalize_label(ann.type_id)}
        if registries is not None:
            registry = registries.get(ann.ontology)
            if registry is not None and ann.type_id in registry:
                candidates.add(registry.get(ann.type_id).normalized_label)
        labels.update(candidates & pii_set)
    return sorted(labels)


def anonymize_pii(
    table: Table,
    annotations,
    policy: PiiPolicy,
    seed: int,
    registries=None,
) -> tuple[Table, list[int]]:
    """Replace the values of PII-annotated columns with synthetic ones.

    ``registries`` (ontology tag -> TypeRegistry) lets annotation type
    ids resolve to their labels; without it, type ids are matched
    against the policy labels directly.  A column whose only PII type is
    ``name`` is left alone unless some other column carries a different
    PII type (names alone are too ambiguous to burn).
    """
    for ann in annotations:
        if not 0 <= ann.column_index < table.column_count:
            raise ValueError(f"annotation column {ann.column_index} out of range")

    per_column = {
        i: _pii_labels_for_column(annotations, i, policy, registries)
        for i in range(table.column_count)
    }
    other_than_name = {
        i for i, labels in per_column.items() if any(lb != PII_NAME_TYPE for lb in labels)
    }

    target_categories: dict[int, str] = {}
    for i, labels in per_column.items():
        if not labels:
            continue
        non_name = [lb for lb in labels if lb != PII_NAME_TYPE]
        if not non_name and policy.name_needs_cooccurrence and not (other_than_name - {i}):
            continue
        chosen = non_name[0] if non_name else PII_NAME_TYPE
        category = policy.generator_map.get(chosen)
        if category is None:
            raise UnknownPiiType(f"policy lists {chosen!r} but maps no generator for it")
        target_categories[i] = category

    if not target_categories:
        return table, []

    columns = [table.column(i) for i in range(table.column_count)]
    for i, category in sorted(target_categories.items()):
        original = frozenset(columns[i])
        rng = random.Random(f"{seed}:{i}")
        columns[i] = [_fresh_value(category, rng, original) for _ in columns[i]]

    rows = [[columns[i][r] for i in range(table.column_count)] for r in range(table.row_count)]
    return replace(table, rows=rows), sorted(target_categories)
