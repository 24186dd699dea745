"""Turn raw CSV bytes into rectangular tables.

The salvage rules, in the order they apply:

1. bytes are decoded as UTF-8 with replacement characters, BOM stripped;
2. leading lines that are blank or ``#``-commented are skipped;
3. the first surviving line is the (single) header row;
4. data lines that are blank, commented, or whose field count disagrees
   with the header are dropped and logged, never fatal;
5. when the header and/or every data row carries trailing empty fields
   whose removal makes all field counts agree, those redundant trailing
   separators are stripped (realignment).

Cell values stay strings throughout; :func:`infer_atomic_types` attaches
a coarse per-column tag as metadata only.
"""

from __future__ import annotations

import csv
import io
import re
import statistics
from dataclasses import dataclass, field, replace

from .errors import AllLinesSkipped, AllRowsBad, HeaderMissing, Undecidable
from .harvest import FileRef

DELIMITER_CANDIDATES = (",", ";", "\t", "|")
QUOTE_CHAR = '"'
SNIFF_SAMPLE_LINES = 20

ATOMIC_NUMERIC = "Numeric"
ATOMIC_STRING = "String"
ATOMIC_DATE = "Date"
ATOMIC_BOOLEAN = "Boolean"
ATOMIC_OTHER = "Other"
ATOMIC_TYPES = (ATOMIC_NUMERIC, ATOMIC_STRING, ATOMIC_DATE, ATOMIC_BOOLEAN, ATOMIC_OTHER)

# Fraction of non-empty cells that must match for a column to take a
# Numeric/Date/Boolean tag; tolerates stray sentinel cells.
TYPE_MATCH_THRESHOLD = 0.95

ACTION_PREAMBLE = "preamble"
ACTION_EMPTY = "empty line"
ACTION_COMMENT = "comment line"
ACTION_EXTRA_DELIMITERS = "extra delimiters"
ACTION_MISSING_FIELDS = "missing fields"
ACTION_REALIGNED = "realigned"

NUMERIC_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
BOOLEAN_TOKENS = frozenset({"true", "false", "0", "1", "yes", "no"})
DATE_RES = (
    # ISO-8601 date with optional time and zone designator
    re.compile(
        r"^\d{4}-\d{2}-\d{2}"
        r"([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$"
    ),
    # day/month/year style
    re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$"),
)


@dataclass(frozen=True)
class Dialect:
    delimiter: str
    quote_char: str = QUOTE_CHAR

    def __post_init__(self):
        if self.delimiter not in DELIMITER_CANDIDATES:
            raise ValueError(f"delimiter {self.delimiter!r} not in candidate set")


@dataclass
class Table:
    """Rectangular parsed table; every row has exactly ``len(header)`` cells."""

    header: list[str]
    rows: list[list[str]]
    atomic_types: list[str] = field(default_factory=list)
    provenance: FileRef | None = None
    parse_log: list[tuple[int, str]] = field(default_factory=list)
    dialect: Dialect | None = None

    @property
    def column_count(self) -> int:
        return len(self.header)

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column(self, index: int) -> list[str]:
        return [row[index] for row in self.rows]

    def validate(self) -> None:
        if len(self.header) < 1:
            raise ValueError("header must have at least one column")
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("table is not rectangular")
        if self.atomic_types and len(self.atomic_types) != len(self.header):
            raise ValueError("atomic_types length must equal header length")


def decode(raw: bytes) -> str:
    """Lossy UTF-8 decode with BOM stripped; CSVs in the wild are messy."""
    text = raw.decode("utf-8", errors="replace")
    return text.lstrip("﻿")


def _is_blank(line: str) -> bool:
    return not line.strip()


def _is_comment(line: str) -> bool:
    return line.lstrip().startswith("#")


def skip_preamble(lines: list[str]) -> tuple[int, list[str]]:
    """Drop leading blank or commented lines; error if nothing survives."""
    skipped = 0
    for line in lines:
        if _is_blank(line) or _is_comment(line):
            skipped += 1
        else:
            break
    if lines and skipped == len(lines):
        raise AllLinesSkipped("every line is blank or commented")
    return skipped, lines[skipped:]


def _split_fields(line: str, delimiter: str) -> list[str]:
    reader = csv.reader(io.StringIO(line, newline=""), delimiter=delimiter, quotechar=QUOTE_CHAR)
    try:
        return next(reader)
    except (StopIteration, csv.Error):
        return [line]


def sniff_dialect(raw: bytes) -> Dialect:
    """Pick the delimiter whose field counts are highest and steadiest.

    Candidates are scored over the first ``SNIFF_SAMPLE_LINES`` lines
    that are neither blank nor commented: primary key is the highest
    minimum per-line field count, secondary the lowest variance of the
    counts; remaining ties fall back to candidate-set order.
    """
    lines = [ln for ln in decode(raw).splitlines() if not _is_blank(ln) and not _is_comment(ln)]
    sample = lines[:SNIFF_SAMPLE_LINES]
    if not sample:
        raise Undecidable("no parsable lines to sniff")
    best: tuple[int, float] | None = None
    best_delim: str | None = None
    for delim in DELIMITER_CANDIDATES:
        counts = [len(_split_fields(line, delim)) for line in sample]
        if max(counts) < 2:
            continue
        variance = statistics.pvariance(counts)
        key = (min(counts), -variance)
        if best is None or key > best:
            best = key
            best_delim = delim
    if best_delim is None:
        raise Undecidable("no candidate delimiter yields two fields on any line")
    return Dialect(delimiter=best_delim)


def _strip_trailing_empty(fields: list[str]) -> list[str]:
    end = len(fields)
    while end > 1 and fields[end - 1] == "":
        end -= 1
    return fields[:end]


def parse_table(raw: bytes, dialect: Dialect, provenance: FileRef | None = None) -> Table:
    """Parse decoded lines into a rectangular table under the salvage rules."""
    all_lines = decode(raw).splitlines()
    if not all_lines:
        raise HeaderMissing("file has no lines")
    skipped, remaining = skip_preamble(all_lines)
    log: list[tuple[int, str]] = [(i + 1, ACTION_PREAMBLE) for i in range(skipped)]

    header_line_no = skipped + 1
    header = _split_fields(remaining[0], dialect.delimiter)

    candidates: list[tuple[int, list[str]]] = []
    for offset, line in enumerate(remaining[1:], start=header_line_no + 1):
        if _is_blank(line):
            log.append((offset, ACTION_EMPTY))
        elif _is_comment(line):
            log.append((offset, ACTION_COMMENT))
        else:
            candidates.append((offset, _split_fields(line, dialect.delimiter)))

    # Trailing-delimiter realignment: the redundant separators must sit
    # on the header and/or on every surviving data row, and stripping
    # them must leave every field count agreeing with the header's.  A
    # row that merely has stray trailing empties stays a bad line, and a
    # row whose last cell is legitimately empty (counts already matching
    # a trailing-empty-free header) is left alone.
    stripped_header = _strip_trailing_empty(header)
    stripped_rows = [(n, _strip_trailing_empty(f)) for n, f in candidates]
    header_carries = len(stripped_header) < len(header)
    every_row_carries = bool(candidates) and all(
        len(sf) < len(f) for (_, sf), (_, f) in zip(stripped_rows, candidates)
    )
    agrees = all(len(sf) == len(stripped_header) for _, sf in stripped_rows)
    if (header_carries or every_row_carries) and agrees:
        header = stripped_header
        candidates = stripped_rows
        log.append((header_line_no, ACTION_REALIGNED))

    rows: list[list[str]] = []
    for line_no, fields in candidates:
        if len(fields) > len(header):
            log.append((line_no, ACTION_EXTRA_DELIMITERS))
        elif len(fields) < len(header):
            log.append((line_no, ACTION_MISSING_FIELDS))
        else:
            rows.append(fields)

    if candidates and not rows:
        raise AllRowsBad("every data line was dropped")

    log.sort()
    table = Table(header=header, rows=rows, provenance=provenance, parse_log=log, dialect=dialect)
    table.validate()
    return table


def _classify_column(values: list[str]) -> str:
    non_empty = [v for v in values if v.strip()]
    if not non_empty:
        return ATOMIC_OTHER
    n = len(non_empty)
    lowered = [v.strip().lower() for v in non_empty]

    bool_hits = sum(1 for v in lowered if v in BOOLEAN_TOKENS)
    if bool_hits / n >= TYPE_MATCH_THRESHOLD and set(lowered) <= BOOLEAN_TOKENS:
        return ATOMIC_BOOLEAN

    date_hits = sum(1 for v in non_empty if any(p.match(v.strip()) for p in DATE_RES))
    if date_hits / n >= TYPE_MATCH_THRESHOLD:
        return ATOMIC_DATE

    numeric_hits = sum(1 for v in non_empty if NUMERIC_RE.match(v.strip()))
    if numeric_hits / n >= TYPE_MATCH_THRESHOLD:
        return ATOMIC_NUMERIC

    return ATOMIC_STRING


def infer_atomic_types(table: Table) -> Table:
    """Return a copy of the table with per-column atomic type tags filled in."""
    types = [_classify_column(table.column(i)) for i in range(table.column_count)]
    return replace(table, atomic_types=types)


def parse_csv(raw: bytes, provenance: FileRef | None = None, dialect: Dialect | None = None) -> Table:
    """Sniff, parse, and type a raw CSV payload in one call.

    Degenerate files are classified before sniffing so the failure bin
    records the most specific reason.
    """
    lines = decode(raw).splitlines()
    if not lines:
        raise HeaderMissing("file has no lines")
    if all(_is_blank(ln) or _is_comment(ln) for ln in lines):
        raise AllLinesSkipped("every line is blank or commented")
    if dialect is None:
        dialect = sniff_dialect(raw)
    return infer_atomic_types(parse_table(raw, dialect, provenance=provenance))
