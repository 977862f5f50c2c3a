"""Relevance score providers behind one interface.

A provider maps a (query, snippet) pair to a finite score where higher
means more relevant. Four kinds exist: lexical cosine over the TF-IDF
index, cosine over stored dense embeddings, offline score tables (carriers
for externally produced classifier output), and live encoder-service
scoring. Unresolvable pairs raise; there are no silent defaults.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Query, Snippet
from .embedding import EmbeddingStore, EncoderClient, embedding_score, fetch_scores
from .errors import ValidationError
from .tfidf import TfIdfIndex, tfidf_score

SIMPLEX_TOLERANCE = 1e-6

SCORE_TABLE_HEADER = ("query_id", "snippet_id", "score")
THREE_WAY_HEADER = ("query_id", "snippet_id", "entailment", "neutral", "contradiction")


@dataclass(frozen=True)
class ThreeWayScores:
    """Entailment/neutral/contradiction probabilities on the simplex."""

    entailment: float
    neutral: float
    contradiction: float

    def __post_init__(self) -> None:
        values = (self.entailment, self.neutral, self.contradiction)
        for value in values:
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"three-way scores must be finite and >= 0, got {value!r}")
        total = sum(values)
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ValidationError(f"three-way scores must sum to 1 (got {total!r})")


def snli_to_binary(scores: ThreeWayScores) -> float:
    """Collapse a three-way entailment distribution to a binary relevance
    score: entailment is the relevant class, the rest are not-relevant."""
    return scores.entailment


@dataclass
class ScoreTable:
    """(query_id, snippet_id) -> score in [0, 1], produced offline."""

    scores: dict[tuple[str, str], float] = field(default_factory=dict)
    model: str | None = None
    source: str | None = None

    def __post_init__(self) -> None:
        for key, value in self.scores.items():
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValidationError(f"score for {key} out of range [0, 1]: {value!r}")

    def lookup(self, query_id: str, snippet_id: str) -> float:
        try:
            return self.scores[(query_id, snippet_id)]
        except KeyError:
            raise KeyError(f"no score for pair ({query_id!r}, {snippet_id!r})") from None


def _read_csv_rows(path: str | Path, header: tuple[str, ...]):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            first = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: missing header row") from None
        if tuple(first) != header:
            raise ValidationError(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}:{line_no}: expected {len(header)} columns")
            yield line_no, row


def load_score_table(path: str | Path, model: str | None = None) -> ScoreTable:
    """Load a score CSV (query_id,snippet_id,score) with [0, 1] validation."""
    scores: dict[tuple[str, str], float] = {}
    for line_no, (query_id, snippet_id, raw) in _read_csv_rows(path, SCORE_TABLE_HEADER):
        try:
            value = float(raw)
        except ValueError:
            raise ValidationError(f"{path}:{line_no}: score {raw!r} is not a number") from None
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise ValidationError(f"{path}:{line_no}: score {value!r} out of range [0, 1]")
        key = (query_id, snippet_id)
        if key in scores:
            raise ValidationError(f"{path}:{line_no}: duplicate pair {key}")
        scores[key] = value
    return ScoreTable(scores=scores, model=model, source=str(path))


def load_three_way_table(path: str | Path, model: str | None = None) -> ScoreTable:
    """Load a three-way score CSV and collapse each row to its binary score."""
    scores: dict[tuple[str, str], float] = {}
    for line_no, row in _read_csv_rows(path, THREE_WAY_HEADER):
        query_id, snippet_id = row[0], row[1]
        try:
            entailment, neutral, contradiction = (float(x) for x in row[2:])
        except ValueError:
            raise ValidationError(f"{path}:{line_no}: scores must be numbers") from None
        try:
            three_way = ThreeWayScores(entailment, neutral, contradiction)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from None
        key = (query_id, snippet_id)
        if key in scores:
            raise ValidationError(f"{path}:{line_no}: duplicate pair {key}")
        scores[key] = snli_to_binary(three_way)
    return ScoreTable(scores=scores, model=model, source=str(path))


class TfIdfProvider:
    """Lexical cosine over the TF-IDF index; snippets must be indexed."""

    kind = "tfidf"

    def __init__(self, index: TfIdfIndex):
        self.index = index

    def score(self, query: Query, snippet: Snippet) -> float:
        return tfidf_score(self.index, query.text, snippet.id)


class EmbeddingCosineProvider:
    """Cosine over stored dense vectors, keyed by query and snippet id."""

    kind = "embedding_cosine"

    def __init__(self, store: EmbeddingStore):
        self.store = store

    def score(self, query: Query, snippet: Snippet) -> float:
        return embedding_score(self.store, query.id, snippet.id)


class TableProvider:
    """Offline score table lookup; missing pairs are hard errors."""

    kind = "score_table"

    def __init__(self, table: ScoreTable):
        self.table = table

    def score(self, query: Query, snippet: Snippet) -> float:
        return self.table.lookup(query.id, snippet.id)


class EncoderServiceProvider:
    """Live scoring through the encoder service's /score endpoint."""

    kind = "encoder_service"

    def __init__(self, client: EncoderClient):
        self.client = client

    def score(self, query: Query, snippet: Snippet) -> float:
        return fetch_scores(self.client, [(query.text, snippet.text)])[0]


def relevance_score(provider, query: Query, snippet: Snippet) -> float:
    """Score one (query, snippet) pair through a provider; always finite."""
    value = provider.score(query, snippet)
    if not math.isfinite(value):
        raise ValidationError(
            f"provider {provider.kind} returned a non-finite score for "
            f"({query.id!r}, {snippet.id!r}): {value!r}"
        )
    return float(value)
