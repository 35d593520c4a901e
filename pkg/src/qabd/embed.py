"""Embedding providers and the similarity kernel used as the projection operator.

The engine's math is encoder-agnostic: any object with ``embed(text) -> unit
vector`` and a ``dim`` works. Three providers are shipped:

* ``HashingEmbedder`` -- deterministic, dependency-free feature hashing
  (signed bag of tokens via 64-bit FNV-1a). Bit-exact across platforms and
  releases; the default for tests and fixtures.
* ``VectorStore`` -- serves precomputed vectors from a text file, keyed by
  statement.
* ``RemoteEmbedder`` -- client for an external embedding service, with an
  on-disk response cache so event-log replay stays deterministic.
"""

from __future__ import annotations

import hashlib
import json
import os
import urllib.error
import urllib.request
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import (
    BadDimensionError,
    BadResponseError,
    DimensionMismatchError,
    EmptyTextError,
    TransportError,
    UnknownKeyError,
    ZeroVectorError,
)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash: xor each byte into the state, then multiply."""
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def tokenize(text: str) -> list[str]:
    """Split into maximal runs of Unicode letters/digits, lowercased."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current).lower())
            current = []
    if current:
        tokens.append("".join(current).lower())
    return tokens


def token_slot(token: str, dim: int) -> tuple[int, int]:
    """Coordinate index and sign for one token: index = hash mod dim,
    sign from hash bit 63 (+1 when clear, -1 when set)."""
    h = fnv1a_64(token.encode("utf-8"))
    sign = -1 if (h >> 63) & 1 else 1
    return h % dim, sign


class EmbeddingProvider(Protocol):
    """Contract: deterministic text -> unit vector for a fixed configuration."""

    dim: int

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Feature-hashed signed bag-of-tokens embedder."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise BadDimensionError(f"dim must be >= 1, got {dim}")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise EmptyTextError(f"no tokens in {text!r}")
        acc = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            index, sign = token_slot(token, self.dim)
            acc[index] += sign
        norm = float(np.linalg.norm(acc))
        if norm < 1e-12:
            # Possible only when opposite-signed tokens cancel exactly.
            raise ZeroVectorError(f"tokens cancel to zero for {text!r}")
        out = acc / norm
        out.flags.writeable = False
        return out


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of unit vectors, clamped to [-1, +1] against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def _normalized(values: Sequence[float], key: str) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise ZeroVectorError(f"zero vector for key {key!r}")
    out = vec / norm
    out.flags.writeable = False
    return out


class VectorStore:
    """Provider backed by a precomputed-vector file.

    File format: one ``key<TAB>v1,v2,...,vd`` entry per line, UTF-8, ``#``
    comments and blank lines ignored. Vectors are re-normalized to unit
    length on load; every entry must share one dimension.
    """

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.vectors = vectors
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        try:
            return self.vectors[text]
        except KeyError:
            raise UnknownKeyError(f"no stored vector for key {text!r}") from None


def load_vectors(source: str | Path | Iterable[str]) -> VectorStore:
    """Parse a vector file (path or line iterable) into a VectorStore."""
    if isinstance(source, (str, Path)):
        lines: Iterable[str] = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = source
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise BadDimensionError(f"line {lineno}: expected key<TAB>values")
        key, _, payload = line.partition("\t")
        try:
            values = [float(part) for part in payload.split(",")]
        except ValueError as exc:
            raise BadDimensionError(f"line {lineno}: {exc}") from None
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise BadDimensionError(
                f"line {lineno}: dimension {len(values)} != {dim}"
            )
        vectors[key] = _normalized(values, key)
    if dim is None:
        raise BadDimensionError("no vectors in source")
    return VectorStore(vectors, dim)


class RemoteEmbedder:
    """Client for an external embedding endpoint.

    Protocol: ``POST {"texts": [...]}`` returning ``{"vectors": [[...], ...]}``.
    Responses are re-normalized and cached (in memory, and on disk when
    ``cache_dir`` is given) per (endpoint, text) so replays never depend on
    the service being reachable or stable.
    """

    def __init__(self, endpoint: str, cache_dir: str | Path | None = None, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, np.ndarray] = {}
        self.dim: int = 0  # set after the first successful embedding

    def _cache_key(self, text: str) -> str:
        digest = hashlib.sha256(f"{self.endpoint}\x00{text}".encode("utf-8"))
        return digest.hexdigest()

    def _cache_path(self, text: str) -> Path | None:
        if not self.cache_dir:
            return None
        return self.cache_dir / f"{self._cache_key(text)}.json"

    def _from_cache(self, text: str) -> np.ndarray | None:
        if text in self._memory:
            return self._memory[text]
        path = self._cache_path(text)
        if path and path.exists():
            values = json.loads(path.read_text(encoding="utf-8"))
            vec = _normalized(values, text)
            self._memory[text] = vec
            self.dim = self.dim or len(vec)
            return vec
        return None

    def _store(self, text: str, values: list[float]) -> np.ndarray:
        vec = _normalized(values, text)
        self._memory[text] = vec
        path = self._cache_path(text)
        if path:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(values), encoding="utf-8")
            os.replace(tmp, path)
        self.dim = self.dim or len(vec)
        return vec

    def embed(self, text: str) -> np.ndarray:
        cached = self._from_cache(text)
        if cached is not None:
            return cached
        body = json.dumps({"texts": [text]}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = response.read()
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"embedding endpoint unreachable: {exc}") from exc
        try:
            parsed = json.loads(payload)
            vectors = parsed["vectors"]
            values = [float(v) for v in vectors[0]]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BadResponseError(f"malformed embedding response: {exc}") from exc
        if not values:
            raise BadResponseError("empty vector in response")
        return self._store(text, values)
