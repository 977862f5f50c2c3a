"""Model backends: a deterministic stub pair for CI plus optional real
sentence-transformer checkpoints (opt-in by name).

Stub encoder: each text maps to unit-normalized standard normals drawn from
PCG64 seeded with the first 8 bytes of sha256(text). Stub scorer: the first
8 bytes of sha256(query + "\\x1f" + snippet), big-endian, divided by 2**64.
Both are pure functions of their inputs.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

STUB_MODEL_NAME = "stub"
STUB_DIMENSION = 32

# Index of the entailment class for 3-way cross-encoders; most NLI
# checkpoints order logits [contradiction, entailment, neutral].
ENTAILMENT_INDEX = int(os.environ.get("ENTAILMENT_INDEX", "1"))


def _text_seed(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


class StubEncoder:
    """Deterministic hash-to-vector encoder."""

    name = STUB_MODEL_NAME

    def __init__(self, dimension: int = STUB_DIMENSION):
        self.dimension = dimension

    def encode(self, texts: list[str]) -> list[list[float]]:
        vectors = []
        for text in texts:
            rng = np.random.Generator(np.random.PCG64(_text_seed(text)))
            vector = rng.standard_normal(self.dimension)
            vector /= np.linalg.norm(vector)
            vectors.append([float(x) for x in vector])
        return vectors


class StubScorer:
    """Deterministic hash-to-score relevance stub in [0, 1]."""

    name = STUB_MODEL_NAME

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        return [
            _text_seed(query + "\x1f" + snippet) / 2**64 for query, snippet in pairs
        ]


class SbertEncoder:
    """sentence-transformers bi-encoder wrapper (mean pooling per SBERT)."""

    def __init__(self, name: str):
        from sentence_transformers import SentenceTransformer

        self.name = name
        self._model = SentenceTransformer(name)
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> list[list[float]]:
        vectors = self._model.encode(texts, convert_to_numpy=True, show_progress_bar=False)
        return [[float(x) for x in vector] for vector in vectors]


class CrossEncoderScorer:
    """sentence-transformers cross-encoder wrapper. Three-way entailment
    heads are collapsed server-side: softmax, then the entailment class
    probability; single-logit heads pass through a sigmoid."""

    def __init__(self, name: str):
        from sentence_transformers import CrossEncoder

        self.name = name
        self._model = CrossEncoder(name)

    def score(self, pairs: list[tuple[str, str]]) -> list[float]:
        raw = np.atleast_1d(
            self._model.predict([list(pair) for pair in pairs], apply_softmax=False)
        )
        if raw.ndim == 2 and raw.shape[1] == 3:
            shifted = raw - raw.max(axis=1, keepdims=True)
            probabilities = np.exp(shifted)
            probabilities /= probabilities.sum(axis=1, keepdims=True)
            values = probabilities[:, ENTAILMENT_INDEX]
        elif raw.ndim == 2 and raw.shape[1] == 2:
            shifted = raw - raw.max(axis=1, keepdims=True)
            probabilities = np.exp(shifted)
            probabilities /= probabilities.sum(axis=1, keepdims=True)
            values = probabilities[:, 1]
        else:
            values = 1.0 / (1.0 + np.exp(-raw.reshape(-1)))
        return [float(min(max(v, 0.0), 1.0)) for v in values]


def load_encoder(name: str):
    if name == STUB_MODEL_NAME:
        return StubEncoder()
    return SbertEncoder(name)


def load_scorer(name: str):
    if name == STUB_MODEL_NAME:
        return StubScorer()
    return CrossEncoderScorer(name)
