"""Harvest CSV file references from a code-search backend.

The search API caps any query at ``PAGE_CAP`` results, so a topic query
is segmented by file-size ranges until every segment's probed count
fits under the cap (recursive midpoint bisection).  Segments are
half-open byte ranges ``[size_min, size_max)`` that together partition
the whole retrievable-size domain.

Backends are pluggable: :class:`SimulatedBackend` evaluates queries
against a local fixture index so the planner, fetcher, and downloader
run hermetically in tests; :class:`LiveBackend` talks to the real HTTPS
search endpoint with token auth and rate-limit handling.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import logging
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    AuthMissing,
    EmptyTopic,
    InvalidTopicCharacters,
    NotFound,
    ProbeFailure,
    RateLimited,
    SizeMismatch,
    Truncated,
)

logger = logging.getLogger(__name__)

# The search API refuses files larger than this many bytes.
MAX_FILE_SIZE = 438_000
# Sizes 0..MAX_FILE_SIZE inclusive, as a half-open range.
SIZE_DOMAIN = (0, MAX_FILE_SIZE + 1)
# Results-per-query cap imposed by the search API.
PAGE_CAP = 1000

TOKEN_ENV_VAR = "TABLEFORGE_TOKEN"

_TOPIC_RE = re.compile(r"^[a-z][a-z0-9_-]*$")


@dataclass(frozen=True)
class TopicQuery:
    """One vocabulary word paired with the CSV extension qualifier."""

    topic: str
    format_qualifier: str = "csv"
    exclude_forks: bool = True

    def __post_init__(self):
        if not self.topic:
            raise EmptyTopic("topic must be a non-empty word")
        if not _TOPIC_RE.match(self.topic):
            raise InvalidTopicCharacters(
                f"topic {self.topic!r} must be a lowercase word without whitespace or query metacharacters"
            )

    def render(self, size_range: tuple[int, int] | None = None) -> str:
        query = f'"{self.topic}" extension:{self.format_qualifier}'
        if size_range is not None:
            lo, hi = size_range
            if lo < 0 or hi < lo:
                raise ValueError(f"bad size range {size_range!r}")
            query += f" size:{lo}..{hi}"
        return query


def build_query(topic: str, size_range: tuple[int, int] | None = None) -> str:
    """Render the search query string for a topic, validating the topic."""
    return TopicQuery(topic).render(size_range)


@dataclass(frozen=True)
class QuerySegment:
    """A topic query restricted to the half-open size range [size_min, size_max)."""

    base: TopicQuery
    size_min_bytes: int
    size_max_bytes: int
    estimated_count: int
    irreducible: bool = False

    def __post_init__(self):
        if self.size_min_bytes < 0 or self.size_max_bytes <= self.size_min_bytes:
            raise ValueError("segment range must be a non-empty half-open byte range")

    def query_string(self) -> str:
        # Rendered size qualifiers are inclusive on both ends.
        return self.base.render((self.size_min_bytes, self.size_max_bytes - 1))


@dataclass(frozen=True)
class FileRef:
    """One search hit: enough identity to fetch, dedupe, and license-check it."""

    url: str
    repo_id: str
    file_path: str
    size_bytes: int
    license_id: str | None = None
    topic: str = ""

    @property
    def key(self) -> tuple[str, str]:
        return (self.repo_id, self.file_path)

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "repo_id": self.repo_id,
            "file_path": self.file_path,
            "size_bytes": self.size_bytes,
            "license_id": self.license_id,
            "topic": self.topic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FileRef":
        return cls(
            url=d["url"],
            repo_id=d["repo_id"],
            file_path=d["file_path"],
            size_bytes=int(d["size_bytes"]),
            license_id=d.get("license_id"),
            topic=d.get("topic", ""),
        )


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff with jitter, honoring rate-limit reset hints."""

    attempts: int = 5
    base_delay: float = 1.0
    max_delay: float = 60.0

    def delay(self, attempt: int, rng: random.Random, reset_hint: float | None = None) -> float:
        backoff = min(self.max_delay, self.base_delay * (2 ** attempt))
        delay = backoff * rng.uniform(0.5, 1.5)
        if reset_hint is not None:
            delay = max(delay, reset_hint)
        return delay


def _with_retries(fn, policy: RetryPolicy, sleep=time.sleep, rng: random.Random | None = None):
    """Call ``fn`` retrying RateLimited/OSError up to the policy's budget."""
    rng = rng or random.Random()
    last: Exception | None = None
    for attempt in range(policy.attempts):
        try:
            return fn()
        except RateLimited as exc:
            last = exc
            sleep(policy.delay(attempt, rng, exc.reset_after))
        except OSError as exc:
            last = exc
            sleep(policy.delay(attempt, rng))
    raise last  # type: ignore[misc]


def plan_segments(
    topic: TopicQuery,
    count_probe,
    page_cap: int = PAGE_CAP,
    retry: RetryPolicy = RetryPolicy(),
    sleep=time.sleep,
) -> list[QuerySegment]:
    """Bisect the size domain until every segment's count fits under the cap.

    ``count_probe(topic, size_min, size_max)`` returns the number of
    hits in the half-open range.  A range whose count exceeds the cap is
    split at its byte midpoint and both halves re-probed; a width-1
    range that still exceeds the cap cannot be split further and is
    returned flagged irreducible.
    """
    if page_cap < 1:
        raise ValueError("page_cap must be >= 1")

    def probe(lo: int, hi: int) -> int:
        try:
            return _with_retries(lambda: count_probe(topic, lo, hi), retry, sleep=sleep)
        except Exception as exc:
            raise ProbeFailure(f"count probe failed for [{lo}, {hi}): {exc}") from exc

    segments: list[QuerySegment] = []
    # Explicit stack, left range first, keeps the output ordered by
    # size_min_bytes without a final sort.
    stack = [SIZE_DOMAIN]
    while stack:
        lo, hi = stack.pop()
        count = probe(lo, hi)
        if count <= page_cap:
            segments.append(QuerySegment(topic, lo, hi, count))
        elif hi - lo == 1:
            segments.append(QuerySegment(topic, lo, hi, count, irreducible=True))
        else:
            mid = (lo + hi) // 2
            stack.append((mid, hi))
            stack.append((lo, mid))
    return segments


def fetch_refs(
    segment: QuerySegment,
    backend,
    retry: RetryPolicy = RetryPolicy(),
    sleep=time.sleep,
) -> list[FileRef]:
    """Traverse all result pages of a segment, deduplicating by (repo, path).

    Raises :class:`Truncated` (carrying the partial result) when the
    backend delivered fewer hits than it advertised.
    """
    collected: dict[tuple[str, str], FileRef] = {}
    raw_count = 0
    advertised = 0
    page = 1
    while True:
        refs, total = _with_retries(
            lambda p=page: backend.fetch_page(
                segment.base, segment.size_min_bytes, segment.size_max_bytes, p
            ),
            retry,
            sleep=sleep,
        )
        advertised = total
        if not refs:
            break
        raw_count += len(refs)
        for ref in refs:
            collected.setdefault(ref.key, ref)
        if raw_count >= advertised:
            break
        page += 1
        if page > advertised // getattr(backend, "page_size", 1) + 2:
            break  # defensive bound against a backend that never drains
    result = list(collected.values())
    if raw_count < advertised:
        raise Truncated(
            f"backend advertised {advertised} hits but returned {raw_count}", refs=result
        )
    return result


def collect_refs(
    topic: TopicQuery,
    backend,
    page_cap: int = PAGE_CAP,
    retry: RetryPolicy = RetryPolicy(),
    sleep=time.sleep,
) -> tuple[list[FileRef], list[QuerySegment]]:
    """Plan a topic's segments and fetch every ref, deduplicated across segments."""
    segments = plan_segments(
        topic, lambda q, lo, hi: backend.count(q, lo, hi), page_cap, retry, sleep
    )
    merged: dict[tuple[str, str], FileRef] = {}
    for segment in segments:
        if segment.estimated_count == 0:
            continue
        try:
            refs = fetch_refs(segment, backend, retry, sleep)
        except Truncated as exc:
            logger.warning("segment %s..%s truncated: %s", segment.size_min_bytes,
                           segment.size_max_bytes, exc)
            refs = exc.refs
        for ref in refs:
            merged.setdefault(ref.key, ref)
    return list(merged.values()), segments


def write_plan(refs: list[FileRef], path) -> None:
    """Persist a harvest plan as JSON lines, one FileRef per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for ref in refs:
            fh.write(json.dumps(ref.to_dict(), ensure_ascii=False) + "\n")


def read_plan(path) -> list[FileRef]:
    refs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                refs.append(FileRef.from_dict(json.loads(line)))
    return refs


_FILENAME_SAFE = re.compile(r"[^A-Za-z0-9._-]")


class DownloadStore:
    """Raw-bytes store addressed by (repo_id, file_path), collision-suffixed.

    The index file maps each ref key to its stored filename and content
    hash, which is what makes re-downloads no-ops.  Safe to use from the
    worker pool: name assignment and index updates are serialized.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.files_dir = self.root / "files"
        self.files_dir.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.json"
        self._lock = threading.Lock()
        if self._index_path.exists():
            self._index = json.loads(self._index_path.read_text(encoding="utf-8"))
        else:
            self._index = {}

    @staticmethod
    def _key(ref: FileRef) -> str:
        return f"{ref.repo_id}\x00{ref.file_path}"

    def __contains__(self, ref: FileRef) -> bool:
        return self._key(ref) in self._index

    def __len__(self) -> int:
        return len(self._index)

    def get(self, ref: FileRef) -> bytes | None:
        entry = self._index.get(self._key(ref))
        if entry is None or entry.get("sha256") is None:
            return None  # unknown, or name reserved but content never arrived
        path = self.files_dir / entry["file"]
        if not path.exists():
            return None
        return path.read_bytes()

    def entries(self) -> list[dict]:
        return [dict(v, key=k) for k, v in sorted(self._index.items())]

    def assign_name(self, ref: FileRef) -> str:
        """Reserve a stored filename for a ref (idempotent per key)."""
        with self._lock:
            return self._assign_name_locked(ref)

    def _assign_name_locked(self, ref: FileRef) -> str:
        key = self._key(ref)
        entry = self._index.get(key)
        if entry is not None:
            return entry["file"]
        base = _FILENAME_SAFE.sub("_", os.path.basename(ref.file_path)) or "file.csv"
        stem, dot, ext = base.partition(".")
        taken = {e["file"] for e in self._index.values()}
        name = base
        n = 0
        while name in taken:
            n += 1
            name = f"{stem}_{n}{dot}{ext}"
        self._index[key] = {"file": name, "size": ref.size_bytes, "sha256": None}
        return name

    def put(self, ref: FileRef, data: bytes) -> Path:
        with self._lock:
            name = self._assign_name_locked(ref)
            target = self.files_dir / name
            tmp = target.with_suffix(target.suffix + ".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, target)
            self._index[self._key(ref)]["sha256"] = hashlib.sha256(data).hexdigest()
            self._persist_locked()
        return target

    def _persist_locked(self) -> None:
        tmp = self._index_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._index, indent=2, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self._index_path)


def download(
    ref: FileRef,
    backend,
    store: DownloadStore,
    retry: RetryPolicy = RetryPolicy(),
    sleep=time.sleep,
) -> bytes:
    """Fetch one file's exact bytes, persisting them in the store.

    A ref already present in the store short-circuits without touching
    the backend, which is what makes whole-plan re-runs idempotent.
    """
    if ref.size_bytes > MAX_FILE_SIZE:
        raise ValueError(
            f"{ref.file_path}: {ref.size_bytes} bytes exceeds the {MAX_FILE_SIZE}-byte retrieval limit"
        )
    existing = store.get(ref)
    if existing is not None:
        return existing
    data = _with_retries(lambda: backend.fetch_bytes(ref), retry, sleep=sleep)
    if len(data) != ref.size_bytes:
        raise SizeMismatch(
            f"{ref.file_path}: advertised {ref.size_bytes} bytes, received {len(data)}"
        )
    store.put(ref, data)
    return data


def download_all(
    refs: list[FileRef],
    backend,
    store: DownloadStore,
    workers: int = 8,
    retry: RetryPolicy = RetryPolicy(),
    sleep=time.sleep,
) -> tuple[list[FileRef], list[tuple[FileRef, Exception]]]:
    """Download a plan under a bounded worker pool; returns (ok, failed).

    Filenames are assigned sequentially in plan order before any fetch
    starts, so the store layout does not depend on completion order.
    """
    for ref in refs:
        if ref.size_bytes <= MAX_FILE_SIZE:
            store.assign_name(ref)

    def one(ref: FileRef):
        return download(ref, backend, store, retry, sleep)

    ok: list[FileRef] = []
    failed: list[tuple[FileRef, Exception]] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {pool.submit(one, ref): ref for ref in refs}
        for future, ref in futures.items():
            try:
                future.result()
                ok.append(ref)
            except Exception as exc:
                logger.warning("download failed for %s: %s", ref.file_path, exc)
                failed.append((ref, exc))
    return ok, failed


class SimulatedBackend:
    """Search backend evaluated against a local fixture index.

    The index is a JSON file ``{"files": [{"repo", "path", "size",
    "license", "contains": [words]}]}``; raw bytes for download live
    under ``<dir>/files/<repo>/<path>``.
    """

    page_size = 100

    def __init__(self, records: list[dict], files_dir=None):
        self.records = records
        self.files_dir = Path(files_dir) if files_dir is not None else None
        self._by_topic: dict[str, tuple[list[int], list[dict]]] = {}

    @classmethod
    def from_path(cls, path) -> "SimulatedBackend":
        path = Path(path)
        index_path = path / "index.json" if path.is_dir() else path
        data = json.loads(index_path.read_text(encoding="utf-8"))
        return cls(data["files"], files_dir=index_path.parent / "files")

    def _topic_entries(self, topic: str) -> tuple[list[int], list[dict]]:
        cached = self._by_topic.get(topic)
        if cached is None:
            matching = sorted(
                (r for r in self.records if topic in r.get("contains", ())),
                key=lambda r: (r["size"], r["repo"], r["path"]),
            )
            cached = ([r["size"] for r in matching], matching)
            self._by_topic[topic] = cached
        return cached

    def count(self, query: TopicQuery, size_min: int, size_max: int) -> int:
        sizes, _ = self._topic_entries(query.topic)
        return bisect.bisect_left(sizes, size_max) - bisect.bisect_left(sizes, size_min)

    def _ref(self, record: dict, topic: str) -> FileRef:
        return FileRef(
            url=f"sim://{record['repo']}/{record['path']}",
            repo_id=record["repo"],
            file_path=record["path"],
            size_bytes=record["size"],
            license_id=record.get("license"),
            topic=topic,
        )

    def fetch_page(
        self, query: TopicQuery, size_min: int, size_max: int, page: int
    ) -> tuple[list[FileRef], int]:
        sizes, matching = self._topic_entries(query.topic)
        lo = bisect.bisect_left(sizes, size_min)
        hi = bisect.bisect_left(sizes, size_max)
        total = hi - lo
        start = lo + (page - 1) * self.page_size
        stop = min(hi, start + self.page_size)
        refs = [self._ref(r, query.topic) for r in matching[start:stop]] if start < hi else []
        return refs, total

    def fetch_bytes(self, ref: FileRef) -> bytes:
        if self.files_dir is None:
            raise NotFound(f"simulated backend has no files directory for {ref.url}")
        target = self.files_dir / ref.repo_id / ref.file_path
        if not target.exists():
            raise NotFound(f"no fixture file for {ref.url}")
        return target.read_bytes()


class LiveBackend:
    """Thin client for the live HTTPS code-search endpoint.

    Fork exclusion rides on the endpoint's default behavior rather than
    the rendered query string, which stays in the documented
    ``"topic" extension:csv size:a..b`` form.
    """

    page_size = 100

    def __init__(self, token: str | None = None, session=None, api_url: str = "https://api.github.com"):
        self.token = token or os.environ.get(TOKEN_ENV_VAR)
        if not self.token:
            raise AuthMissing(f"set {TOKEN_ENV_VAR} or pass a token")
        if session is None:
            import requests

            session = requests.Session()
        self.session = session
        self.api_url = api_url.rstrip("/")

    def _get(self, url: str, params: dict | None = None):
        headers = {
            "Authorization": f"token {self.token}",
            "Accept": "application/vnd.github.v3+json",
        }
        resp = self.session.get(url, params=params, headers=headers, timeout=30)
        if resp.status_code in (403, 429):
            reset_after = None
            if "Retry-After" in resp.headers:
                reset_after = float(resp.headers["Retry-After"])
            elif "X-RateLimit-Reset" in resp.headers:
                reset_after = max(0.0, float(resp.headers["X-RateLimit-Reset"]) - time.time())
            raise RateLimited(f"HTTP {resp.status_code} from {url}", reset_after=reset_after)
        if resp.status_code == 404:
            raise NotFound(url)
        resp.raise_for_status()
        return resp

    def count(self, query: TopicQuery, size_min: int, size_max: int) -> int:
        rendered = query.render((size_min, size_max - 1))
        resp = self._get(f"{self.api_url}/search/code", {"q": rendered, "per_page": 1})
        return int(resp.json().get("total_count", 0))

    def fetch_page(
        self, query: TopicQuery, size_min: int, size_max: int, page: int
    ) -> tuple[list[FileRef], int]:
        rendered = query.render((size_min, size_max - 1))
        resp = self._get(
            f"{self.api_url}/search/code",
            {"q": rendered, "per_page": self.page_size, "page": page},
        )
        payload = resp.json()
        refs = []
        for item in payload.get("items", ()):
            repo = item.get("repository", {})
            license_id = (repo.get("license") or {}).get("spdx_id")
            refs.append(
                FileRef(
                    url=item.get("url", ""),
                    repo_id=repo.get("full_name", ""),
                    file_path=item.get("path", ""),
                    size_bytes=int(item.get("size", 0)),
                    license_id=license_id,
                    topic=query.topic,
                )
            )
        return refs, int(payload.get("total_count", 0))

    def fetch_bytes(self, ref: FileRef) -> bytes:
        headers = {"Authorization": f"token {self.token}", "Accept": "application/vnd.github.raw"}
        resp = self.session.get(ref.url, headers=headers, timeout=60)
        if resp.status_code == 404:
            raise NotFound(ref.url)
        if resp.status_code in (403, 429):
            raise RateLimited(f"HTTP {resp.status_code} fetching {ref.url}")
        resp.raise_for_status()
        return resp.content
