"""Word and phrase embeddings with character n-gram subword fallback.

Two providers share one interface:

* :class:`VectorFileProvider` loads a plain-text vector file
  (``<count> <dim>`` header, then ``word c1 ... cdim`` per line, the
  format used by public word-vector releases).  Out-of-vocabulary words
  fall back to the average of their character n-gram vectors; an n-gram
  uses its stored vector when the file happens to contain it, otherwise
  a deterministic hashed vector.
* :class:`HashedNgramProvider` skips the file entirely and embeds every
  word from hashed n-gram bucket vectors.  It exists so tests and
  offline runs get real, deterministic geometry without shipping a
  pretrained model.

Both are pure: the same string always embeds to the bitwise-same
vector, in any process, because n-gram hashing goes through sha1 rather
than Python's salted ``hash``.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

from .errors import DimMismatch, EmptyPhrase, EmptyToken, ZeroVector

DEFAULT_NGRAM_RANGE = (3, 6)
DEFAULT_HASHED_DIM = 64
# Documented constant: hashed providers built with the same seed agree
# across processes and platforms.
DEFAULT_HASH_SEED = 7919
DEFAULT_HASH_BUCKETS = 1 << 20

BOUNDARY_START = "<"
BOUNDARY_END = ">"


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimMismatch(f"vector dims differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity undefined for all-zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    return 1.0 - cosine_similarity(u, v)


def char_ngrams(word: str, ngram_range: tuple[int, int] = DEFAULT_NGRAM_RANGE) -> list[str]:
    """Distinct boundary-padded character n-grams of a word, sorted.

    The word is wrapped in boundary markers before slicing, so prefixes
    and suffixes hash differently from interior grams.  When the padded
    word is shorter than the smallest n, the whole padded word is the
    single gram.
    """
    padded = BOUNDARY_START + word + BOUNDARY_END
    lo, hi = ngram_range
    grams = {
        padded[i : i + n]
        for n in range(lo, hi + 1)
        for i in range(len(padded) - n + 1)
    }
    if not grams:
        grams = {padded}
    return sorted(grams)


@lru_cache(maxsize=65536)
def _bucket_vector(gram: str, dim: int, seed: int, buckets: int) -> np.ndarray:
    # Cached and shared; callers accumulate, never mutate.
    digest = hashlib.sha1(gram.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:8], "big") % buckets
    rng = np.random.default_rng((seed, bucket))
    return rng.standard_normal(dim)


class HashedNgramProvider:
    """Deterministic n-gram-hash embeddings for tests and offline runs."""

    kind = "hashed_ngram"

    def __init__(
        self,
        dim: int = DEFAULT_HASHED_DIM,
        seed: int = DEFAULT_HASH_SEED,
        ngram_range: tuple[int, int] = DEFAULT_NGRAM_RANGE,
        buckets: int = DEFAULT_HASH_BUCKETS,
    ):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.ngram_range = ngram_range
        self.buckets = buckets

    def embed(self, word: str) -> np.ndarray:
        if not word:
            raise EmptyToken("cannot embed the empty token")
        grams = char_ngrams(word, self.ngram_range)
        acc = np.zeros(self.dim, dtype=np.float64)
        for gram in grams:
            acc += _bucket_vector(gram, self.dim, self.seed, self.buckets)
        return acc / len(grams)


class VectorFileProvider:
    """Embeddings backed by a text vector file, with n-gram fallback for OOV words."""

    kind = "vector_file"

    def __init__(
        self,
        path,
        ngram_range: tuple[int, int] = DEFAULT_NGRAM_RANGE,
        seed: int = DEFAULT_HASH_SEED,
        buckets: int = DEFAULT_HASH_BUCKETS,
    ):
        self.ngram_range = ngram_range
        self.seed = seed
        self.buckets = buckets
        self._vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: expected '<count> <dim>' header")
            count, dim = int(header[0]), int(header[1])
            self.dim = dim
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise ValueError(f"{path}: bad line for word {parts[0]!r}")
                self._vectors[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        if len(self._vectors) != count:
            raise ValueError(f"{path}: header says {count} words, found {len(self._vectors)}")

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def embed(self, word: str) -> np.ndarray:
        if not word:
            raise EmptyToken("cannot embed the empty token")
        stored = self._vectors.get(word)
        if stored is not None:
            return stored.copy()
        grams = char_ngrams(word, self.ngram_range)
        acc = np.zeros(self.dim, dtype=np.float64)
        for gram in grams:
            stored = self._vectors.get(gram)
            if stored is not None:
                acc += stored
            else:
                acc += _bucket_vector(gram, self.dim, self.seed, self.buckets)
        return acc / len(grams)


def embed_token(word: str, provider) -> np.ndarray:
    """Vector for a single token via the provider (stored or subword fallback)."""
    return provider.embed(word)


def embed_phrase(phrase: str, provider) -> np.ndarray:
    """Unweighted mean of the token vectors of a whitespace-split phrase."""
    tokens = phrase.split()
    if not tokens:
        raise EmptyPhrase(f"phrase {phrase!r} has no tokens")
    acc = np.zeros(provider.dim, dtype=np.float64)
    for token in tokens:
        acc += provider.embed(token)
    return acc / len(tokens)
