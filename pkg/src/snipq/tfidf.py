"""TF-IDF indexing and cosine scoring over snippet text.

Each snippet is one document. Tokenization lowercases and splits on maximal
runs of non-alphanumeric characters; there is no stemming and no stopword
removal (generic review vocabulary is deliberately retained). A term's
weight is its raw in-document count scaled by the smoothed inverse document
frequency ln((1 + N) / (1 + df)) + 1, so all weights are nonnegative and
cosine scores lie in [0, 1]. Query vectors reuse the corpus idf; queries
are not documents.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Snippet
from .errors import ValidationError

INDEX_FORMAT = "SNIPQ-TFIDF-1"

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal alphanumeric runs, keeping duplicates."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class SparseVector:
    """(column, weight) pairs with strictly increasing columns, no zeros stored."""

    entries: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        previous = -1
        for column, weight in self.entries:
            if column <= previous:
                raise ValidationError("sparse vector columns must be strictly increasing")
            if not weight > 0:
                raise ValidationError(f"sparse vector weights must be > 0, got {weight!r}")
            previous = column

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def dot(self, other: "SparseVector") -> float:
        total = 0.0
        i, j = 0, 0
        a, b = self.entries, other.entries
        while i < len(a) and j < len(b):
            ca, cb = a[i][0], b[j][0]
            if ca == cb:
                total += a[i][1] * b[j][1]
                i += 1
                j += 1
            elif ca < cb:
                i += 1
            else:
                j += 1
        return total

    def norm(self) -> float:
        return math.sqrt(sum(weight * weight for _, weight in self.entries))


def cosine_sparse(u: SparseVector, v: SparseVector) -> float:
    """Cosine of two nonnegative sparse vectors; 0 when either is zero."""
    if u.is_zero or v.is_zero:
        return 0.0
    value = u.dot(v) / (u.norm() * v.norm())
    # Guard rounding; weights are nonnegative so the true value is in [0, 1].
    return min(value, 1.0)


@dataclass(frozen=True)
class TfIdfIndex:
    vocabulary: dict[str, int]
    idf: tuple[float, ...]
    snippet_vectors: dict[str, SparseVector]
    doc_count: int

    def __post_init__(self) -> None:
        if len(self.vocabulary) != len(self.idf):
            raise ValidationError("vocabulary and idf sizes must match")
        size = len(self.idf)
        for snippet_id, vector in self.snippet_vectors.items():
            for column, _ in vector.entries:
                if not 0 <= column < size:
                    raise ValidationError(
                        f"snippet {snippet_id}: column {column} out of vocabulary range"
                    )

    def vector_for(self, snippet_id: str) -> SparseVector:
        try:
            return self.snippet_vectors[snippet_id]
        except KeyError:
            raise KeyError(f"unknown snippet id {snippet_id!r}") from None


def build_index(snippets: Sequence[Snippet]) -> TfIdfIndex:
    """Index each snippet as one document with count * idf weights."""
    if not snippets:
        raise ValidationError("cannot index an empty snippet list")
    docs = [(snippet.id, tokenize(snippet.text)) for snippet in snippets]
    if len({doc_id for doc_id, _ in docs}) != len(docs):
        raise ValidationError("snippet ids must be unique")
    if all(not tokens for _, tokens in docs):
        raise ValidationError("every snippet tokenized to no terms")

    document_frequency: Counter[str] = Counter()
    for _, tokens in docs:
        document_frequency.update(set(tokens))
    vocabulary = {token: column for column, token in enumerate(sorted(document_frequency))}
    total_docs = len(docs)
    idf = tuple(
        math.log((1 + total_docs) / (1 + document_frequency[token])) + 1.0
        for token in sorted(document_frequency)
    )
    vectors: dict[str, SparseVector] = {}
    for doc_id, tokens in docs:
        counts = Counter(tokens)
        entries = tuple(
            (vocabulary[token], counts[token] * idf[vocabulary[token]])
            for token in sorted(counts, key=vocabulary.__getitem__)
        )
        vectors[doc_id] = SparseVector(entries)
    return TfIdfIndex(
        vocabulary=vocabulary, idf=idf, snippet_vectors=vectors, doc_count=total_docs
    )


def vectorize(index: TfIdfIndex, text: str) -> SparseVector:
    """Vectorize free text against the index; out-of-vocabulary tokens drop out."""
    counts = Counter(token for token in tokenize(text) if token in index.vocabulary)
    entries = tuple(
        (index.vocabulary[token], counts[token] * index.idf[index.vocabulary[token]])
        for token in sorted(counts, key=index.vocabulary.__getitem__)
    )
    return SparseVector(entries)


def tfidf_score(index: TfIdfIndex, query_text: str, snippet_id: str) -> float:
    """Cosine between the query vector and an indexed snippet vector."""
    return cosine_sparse(vectorize(index, query_text), index.vector_for(snippet_id))


def save_index(index: TfIdfIndex, path: str | Path) -> None:
    tokens = sorted(index.vocabulary, key=index.vocabulary.__getitem__)
    payload = {
        "format": INDEX_FORMAT,
        "doc_count": index.doc_count,
        "vocabulary": tokens,
        "idf": list(index.idf),
        "snippet_vectors": {
            snippet_id: [[column, weight] for column, weight in vector.entries]
            for snippet_id, vector in index.snippet_vectors.items()
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False)


def load_index(path: str | Path) -> TfIdfIndex:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict) or payload.get("format") != INDEX_FORMAT:
        raise ValidationError(f"{path}: not a {INDEX_FORMAT} index file")
    tokens = payload["vocabulary"]
    return TfIdfIndex(
        vocabulary={token: column for column, token in enumerate(tokens)},
        idf=tuple(payload["idf"]),
        snippet_vectors={
            snippet_id: SparseVector(tuple((int(c), float(w)) for c, w in entries))
            for snippet_id, entries in payload["snippet_vectors"].items()
        },
        doc_count=payload["doc_count"],
    )
