"""tableforge: build, curate, annotate, profile, and search a corpus of
relational tables harvested from code-hosting CSV search."""

from .store import PIPELINE_VERSION as __version__  # noqa: F401
