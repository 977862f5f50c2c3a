"""Dense-vector cosine scoring, with vectors from a sidecar file or a remote
encoder service.

The ranking pipeline is offline-first: it consumes an embedding file keyed
by snippet/query id. fetch_embeddings populates such a file from the
encoder service's HTTP protocol.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import ValidationError


def cosine(u, v) -> float:
    """Cosine similarity of two equal-dimension finite vectors; 0 if either
    has zero norm."""
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValidationError("cosine expects one-dimensional vectors")
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if not np.isfinite(a).all() or not np.isfinite(b).all():
        raise ValidationError("cosine inputs must be finite")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass(frozen=True)
class EmbeddingStore:
    """Immutable map from snippet/query id to a fixed-dimension vector."""

    dimension: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValidationError(f"dimension must be positive, got {self.dimension}")
        for key, vector in self.vectors.items():
            if vector.shape != (self.dimension,):
                raise ValidationError(
                    f"embedding {key!r}: expected dimension {self.dimension}, got {vector.shape}"
                )
            if not np.isfinite(vector).all():
                raise ValidationError(f"embedding {key!r}: non-finite component")

    def vector_for(self, key: str) -> np.ndarray:
        try:
            return self.vectors[key]
        except KeyError:
            raise KeyError(f"unknown embedding key {key!r}") from None


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Load a JSON-Lines embedding file; dimension is inferred from the first
    record and enforced on the rest."""
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None
            if not isinstance(raw, dict) or "key" not in raw or "vector" not in raw:
                raise ValidationError(f"{path}:{line_no}: expected object with key and vector")
            key = raw["key"]
            if not isinstance(key, str) or not key:
                raise ValidationError(f"{path}:{line_no}: key must be a nonempty string")
            if key in vectors:
                raise ValidationError(f"{path}:{line_no}: duplicate key {key!r}")
            try:
                vector = np.asarray(raw["vector"], dtype=float)
            except (TypeError, ValueError):
                raise ValidationError(f"{path}:{line_no}: vector must be a list of reals") from None
            if vector.ndim != 1 or vector.shape[0] == 0:
                raise ValidationError(f"{path}:{line_no}: vector must be a nonempty flat list")
            if dimension is None:
                dimension = int(vector.shape[0])
            elif vector.shape[0] != dimension:
                raise ValidationError(
                    f"{path}:{line_no}: dimension mismatch: expected {dimension}, got {vector.shape[0]}"
                )
            if not np.isfinite(vector).all():
                raise ValidationError(f"{path}:{line_no}: non-finite component in vector")
            vectors[key] = vector
    if dimension is None:
        raise ValidationError(f"{path}: empty embedding file")
    return EmbeddingStore(dimension=dimension, vectors=vectors)


def save_embeddings(records: Iterable[tuple[str, Sequence[float]]], path: str | Path) -> None:
    """Write (key, vector) records as the JSON-Lines embedding format."""
    with open(path, "w", encoding="utf-8") as handle:
        for key, vector in records:
            line = json.dumps(
                {"key": key, "vector": [float(x) for x in vector]}, ensure_ascii=False
            )
            handle.write(line)
            handle.write("\n")


def embedding_score(store: EmbeddingStore, query_key: str, snippet_key: str) -> float:
    """Cosine between two stored vectors, naming whichever key is missing."""
    if query_key not in store.vectors:
        raise KeyError(f"missing query embedding key {query_key!r}")
    if snippet_key not in store.vectors:
        raise KeyError(f"missing snippet embedding key {snippet_key!r}")
    return cosine(store.vectors[query_key], store.vectors[snippet_key])


@dataclass(frozen=True)
class EncoderClient:
    """Stateless HTTP client for the encoder service protocol. Each call is
    an independent request, so one client may be shared across threads."""

    base_url: str
    timeout: float = 30.0
    expected_dimension: int | None = None

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValidationError("encoder client base_url must be nonempty")


def _post_json(client: EncoderClient, endpoint: str, payload: dict) -> dict:
    response = requests.post(
        client.base_url.rstrip("/") + endpoint, json=payload, timeout=client.timeout
    )
    response.raise_for_status()
    try:
        body = response.json()
    except ValueError:
        raise ValidationError(f"malformed encoder response from {endpoint}: not JSON") from None
    if not isinstance(body, dict):
        raise ValidationError(f"malformed encoder response from {endpoint}: expected object")
    return body


def fetch_embeddings(client: EncoderClient, texts: Sequence[str]) -> list[np.ndarray]:
    """Encode a batch of texts, order-preserving."""
    if not texts:
        raise ValidationError("empty batch")
    body = _post_json(client, "/encode", {"texts": list(texts)})
    if "vectors" not in body or not isinstance(body["vectors"], list):
        raise ValidationError("malformed encoder response: missing vectors")
    raw_vectors = body["vectors"]
    if len(raw_vectors) != len(texts):
        raise ValidationError(
            f"count mismatch: sent {len(texts)} texts, got {len(raw_vectors)} vectors"
        )
    dimension = body.get("dimension")
    vectors: list[np.ndarray] = []
    for i, raw in enumerate(raw_vectors):
        try:
            vector = np.asarray(raw, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(f"malformed encoder response: vector {i} is not numeric") from None
        if vector.ndim != 1:
            raise ValidationError(f"malformed encoder response: vector {i} is not flat")
        if dimension is not None and vector.shape[0] != dimension:
            raise ValidationError(
                f"dimension mismatch: vector {i} has {vector.shape[0]}, service declared {dimension}"
            )
        if client.expected_dimension is not None and vector.shape[0] != client.expected_dimension:
            raise ValidationError(
                f"dimension mismatch: vector {i} has {vector.shape[0]}, "
                f"expected {client.expected_dimension}"
            )
        vectors.append(vector)
    return vectors


def fetch_scores(client: EncoderClient, pairs: Sequence[tuple[str, str]]) -> list[float]:
    """Score (query, snippet) text pairs via the service, order-preserving."""
    if not pairs:
        raise ValidationError("empty batch")
    payload = {"pairs": [{"query": q, "snippet": s} for q, s in pairs]}
    body = _post_json(client, "/score", payload)
    if "scores" not in body or not isinstance(body["scores"], list):
        raise ValidationError("malformed encoder response: missing scores")
    scores = body["scores"]
    if len(scores) != len(pairs):
        raise ValidationError(f"count mismatch: sent {len(pairs)} pairs, got {len(scores)} scores")
    out: list[float] = []
    for i, raw in enumerate(scores):
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ValidationError(f"malformed encoder response: score {i} is not numeric") from None
        if not np.isfinite(value) or not 0.0 <= value <= 1.0:
            raise ValidationError(f"score {i} out of range [0, 1]: {value!r}")
        out.append(value)
    return out


def fetch_health(client: EncoderClient) -> dict:
    """Return the service's health document ({"status", "model", "dimension"})."""
    response = requests.get(client.base_url.rstrip("/") + "/health", timeout=client.timeout)
    response.raise_for_status()
    try:
        body = response.json()
    except ValueError:
        raise ValidationError("malformed health response: not JSON") from None
    if not isinstance(body, dict) or "status" not in body:
        raise ValidationError("malformed health response: missing status")
    return body
