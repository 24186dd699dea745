"""Exception types shared across the toolkit.

Every operational failure raised by this package derives from
:class:`TableforgeError` so callers can catch the whole family at once.
Errors carry enough state for a caller to react (e.g. ``RateLimited``
exposes the backend's reset hint, ``Truncated`` carries the partial
result it salvaged).
"""

from __future__ import annotations


class TableforgeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TableforgeError):
    """A configuration file is missing, malformed, or references absent files."""


# --- harvest ---------------------------------------------------------------

class EmptyTopic(TableforgeError):
    pass


class InvalidTopicCharacters(TableforgeError):
    pass


class ProbeFailure(TableforgeError):
    """A count probe kept failing after the retry budget was exhausted."""


class RateLimited(TableforgeError):
    """Backend asked us to back off; ``reset_after`` is seconds, when known."""

    def __init__(self, message: str = "rate limited", reset_after: float | None = None):
        super().__init__(message)
        self.reset_after = reset_after


class AuthMissing(TableforgeError):
    pass


class Truncated(TableforgeError):
    """Backend returned fewer results than advertised; ``refs`` holds the partial list."""

    def __init__(self, message: str, refs: list):
        super().__init__(message)
        self.refs = refs


class NotFound(TableforgeError):
    pass


class SizeMismatch(TableforgeError):
    pass


# --- tableparse ------------------------------------------------------------

class Undecidable(TableforgeError):
    """No candidate delimiter produced at least two fields on any sampled line."""


class AllLinesSkipped(TableforgeError):
    pass


class HeaderMissing(TableforgeError):
    pass


class AllRowsBad(TableforgeError):
    pass


# --- curate ----------------------------------------------------------------

class UnknownPiiType(TableforgeError):
    """An annotation names a PII type the policy has no generator for."""


# --- ontology --------------------------------------------------------------

class DuplicateTypeId(TableforgeError):
    pass


class DanglingSuper(TableforgeError):
    pass


class MalformedRecord(TableforgeError):
    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class UnknownType(TableforgeError):
    pass


class SuperCycle(TableforgeError):
    pass


# --- embed -----------------------------------------------------------------

class ZeroVector(TableforgeError):
    pass


class DimMismatch(TableforgeError):
    pass


class EmptyToken(TableforgeError):
    pass


class EmptyPhrase(TableforgeError):
    pass


# --- annotate --------------------------------------------------------------

class EmptyName(TableforgeError):
    """Column name normalizes to the empty string."""


# --- store -----------------------------------------------------------------

class MetadataMismatch(TableforgeError):
    pass


class MissingSidecar(TableforgeError):
    pass


class MissingData(TableforgeError):
    pass


class CorruptSidecar(TableforgeError):
    pass


# --- analyze ---------------------------------------------------------------

class EmptyCorpus(TableforgeError):
    pass


class UnresolvedGold(TableforgeError):
    pass


# --- complete --------------------------------------------------------------

class NoEligibleSchemas(TableforgeError):
    pass


class EmptyPrefix(TableforgeError):
    pass


class EmptySchema(TableforgeError):
    pass


class EmptyQuery(TableforgeError):
    pass


class EmptyResultRequest(TableforgeError):
    pass
