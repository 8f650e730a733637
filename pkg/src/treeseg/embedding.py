"""Block embeddings of a timeline.

Every utterance ``t`` is embedded together with up to ``W`` preceding
utterances as one text, so each vector carries local context. Backends are
pluggable; a persistent JSONL cache keyed on ``(model, W, block text)`` sits in
front of them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import httpx
import numpy as np

from .exceptions import BackendError, ConfigurationError, EmbeddingError, IntegrityError
from .ingest import Timeline

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 5
DEFAULT_BATCH = 64
DEFAULT_IN_FLIGHT = 4
BLOCK_DELIMITER = "\n"
API_KEY_ENV = "TREESEG_EMBED_KEY"


@dataclass(frozen=True)
class Block:
    anchor_index: int
    first_index: int
    text: str

    @property
    def size(self) -> int:
        return self.anchor_index - self.first_index + 1


def _utterance_text(utt, with_speaker: bool) -> str:
    if with_speaker and utt.speaker:
        return f"{utt.speaker}: {utt.text}"
    return utt.text


def extract_blocks(timeline: Timeline, W: int, embed_speakers: bool = False) -> list[Block]:
    """One block per utterance, spanning ``[max(0, t - W), t]``."""
    if W < 0:
        raise ValueError("window must be non-negative")
    texts = [_utterance_text(u, embed_speakers) for u in timeline]
    blocks = []
    for t in range(len(texts)):
        first = max(0, t - W)
        blocks.append(Block(t, first, BLOCK_DELIMITER.join(texts[first:t + 1])))
    return blocks


@dataclass(frozen=True, eq=False)
class EmbeddingTimeline:
    vectors: np.ndarray
    model_id: str
    window: int

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=np.float64)
        if vec.ndim != 2 or vec.shape[0] == 0 or vec.shape[1] == 0:
            raise IntegrityError(f"expected a non-empty (T, d) array, got shape {vec.shape}")
        if not np.isfinite(vec).all():
            raise IntegrityError("embedding contains non-finite values")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)

    @property
    def T(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.T

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTimeline):
            return NotImplemented
        return (self.model_id == other.model_id and self.window == other.window
                and np.array_equal(self.vectors, other.vectors))


class EmbeddingBackend(Protocol):
    model_id: str
    batch_size: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Embed one batch; returns an array of shape ``(len(texts), d)``."""
        ...


class HashBackend:
    """Deterministic test double: a seeded hash of the text picks a unit vector.

    Vectors come from numpy's PCG64 generator seeded with a BLAKE2b digest of
    the UTF-8 text, so they are identical across runs and platforms.
    """

    def __init__(self, dim: int = 32, seed: int = 0, batch_size: int = DEFAULT_BATCH):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed
        self.batch_size = batch_size
        self.model_id = f"hash-d{dim}-s{seed}"
        self.calls = 0

    def vector(self, text: str) -> np.ndarray:
        digest = hashlib.blake2b(text.encode("utf-8"), digest_size=16,
                                 key=self.seed.to_bytes(8, "little")).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        self.calls += 1
        return np.stack([self.vector(t) for t in texts])


def deterministic_backend(dim: int = 32, seed: int = 0) -> HashBackend:
    return HashBackend(dim=dim, seed=seed)


class RemoteBackend:
    """Client for an embeddings HTTP API.

    Wire contract: ``POST {"model": ..., "input": [...]}`` answered by
    ``{"data": [{"index": i, "embedding": [...]}, ...]}``. Transport errors,
    429 and 5xx responses are retried with exponential backoff; 401/403 raise
    :class:`ConfigurationError` immediately.
    """

    def __init__(self, endpoint_url: str, model_id: str, api_key: Optional[str] = None,
                 batch_size: int = DEFAULT_BATCH, max_retries: int = 4,
                 backoff: float = 0.5, timeout: float = 60.0,
                 transport: Optional[httpx.BaseTransport] = None, sleep=time.sleep):
        self.endpoint_url = endpoint_url
        self.model_id = model_id
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff = backoff
        self._sleep = sleep
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)

    def close(self):
        self._client.close()

    def _post(self, texts):
        payload = {"model": self.model_id, "input": list(texts)}
        last_error = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.endpoint_url, json=payload)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                log.warning("embedding request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise ConfigurationError(
                    f"embedding endpoint rejected credentials (HTTP {resp.status_code}); "
                    f"check {API_KEY_ENV}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                log.warning("embedding request failed (attempt %d): %s", attempt + 1, last_error)
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return resp.json()
        raise BackendError(f"giving up after {self.max_retries + 1} attempts ({last_error})")

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        body = self._post(texts)
        try:
            items = body["data"]
            out = [None] * len(texts)
            for item in items:
                out[item["index"]] = item["embedding"]
        except (KeyError, TypeError, IndexError) as exc:
            raise BackendError(f"malformed embeddings response: {exc!r}") from None
        if any(v is None for v in out) or len(items) != len(texts):
            raise BackendError("response does not cover every input")
        dims = {len(v) for v in out}
        if len(dims) != 1:
            raise IntegrityError(f"inconsistent embedding dimensions in one response: {sorted(dims)}")
        return np.asarray(out, dtype=np.float64)


def remote_backend(endpoint_url: str, model_id: str, api_key: Optional[str] = None, **kwargs) -> RemoteBackend:
    return RemoteBackend(endpoint_url, model_id, api_key, **kwargs)


def cache_key(model_id: str, window: int, text: str) -> str:
    text_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return hashlib.sha256(json.dumps([model_id, window, text_hash]).encode("utf-8")).hexdigest()


class EmbeddingCache:
    """Append-only JSONL vector cache.

    Each line is ``{"key": hex, "model": str, "dim": int, "vec": [float]}``.
    Reads are lock-free; writes are serialized. With ``path=None`` the cache
    lives in memory only.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._vectors: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    vec = np.asarray(rec["vec"], dtype=np.float64)
                    if vec.shape != (rec["dim"],):
                        raise ValueError("dim does not match vector length")
                except (ValueError, KeyError, TypeError) as exc:
                    log.warning("ignoring corrupt cache line %d in %s: %s", lineno, self.path, exc)
                    continue
                self._vectors[rec["key"]] = vec

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, key):
        return key in self._vectors

    def get(self, key: str) -> Optional[np.ndarray]:
        return self._vectors.get(key)

    def put_many(self, model_id: str, items: Sequence[tuple[str, np.ndarray]]) -> None:
        with self._lock:
            fresh = [(k, np.asarray(v, dtype=np.float64)) for k, v in items if k not in self._vectors]
            for k, v in fresh:
                self._vectors[k] = v
            if self.path is None or not fresh:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                for k, v in fresh:
                    rec = {"key": k, "model": model_id, "dim": int(v.shape[0]), "vec": v.tolist()}
                    fh.write(json.dumps(rec) + "\n")


def embed_timeline(timeline: Timeline, W: int, backend: EmbeddingBackend,
                   cache: Optional[EmbeddingCache] = None, *, embed_speakers: bool = False,
                   max_in_flight: int = DEFAULT_IN_FLIGHT) -> EmbeddingTimeline:
    """Embed every block of ``timeline`` as a whole text.

    Cached vectors are reused; only distinct uncached block texts reach the
    backend, in batches of ``backend.batch_size`` with at most
    ``max_in_flight`` concurrent requests. New vectors are written to the cache
    in anchor order once all batches have returned.
    """
    cache = cache if cache is not None else EmbeddingCache()
    blocks = extract_blocks(timeline, W, embed_speakers)
    keys = [cache_key(backend.model_id, W, b.text) for b in blocks]

    pending: dict[str, list[int]] = {}
    for b, key in zip(blocks, keys):
        if key not in cache:
            pending.setdefault(key, []).append(b.anchor_index)
    todo = list(pending)
    texts = [blocks[pending[k][0]].text for k in todo]
    size = max(1, int(backend.batch_size))
    batches = [range(i, min(i + size, len(todo))) for i in range(0, len(todo), size)]

    def run(batch):
        try:
            return batch, backend.embed([texts[j] for j in batch]), None
        except (BackendError, httpx.HTTPError, ValueError) as exc:
            return batch, None, exc

    if len(batches) > 1 and max_in_flight > 1:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]

    fresh: dict[str, np.ndarray] = {}
    failed: list[int] = []
    for batch, vecs, exc in results:
        if exc is not None:
            log.error("embedding batch failed: %s", exc)
            failed.extend(a for j in batch for a in pending[todo[j]])
            continue
        vecs = np.asarray(vecs, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] != len(batch):
            raise IntegrityError(f"backend returned shape {vecs.shape} for {len(batch)} texts")
        for j, v in zip(batch, vecs):
            fresh[todo[j]] = v

    ordered_new = []
    seen = set()
    for key in keys:
        if key in fresh and key not in seen:
            seen.add(key)
            ordered_new.append((key, fresh[key]))
    cache.put_many(backend.model_id, ordered_new)

    if failed:
        raise EmbeddingError("embedding backend failed", sorted(failed))

    vectors = [cache.get(k) for k in keys]
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise IntegrityError(f"embedding dimension mismatch across blocks: {sorted(dims)}")
    return EmbeddingTimeline(np.stack(vectors), backend.model_id, W)
