"""Threshold classification of relevance scores and the metrics used to
compare scorers: support-weighted precision/recall/F1 over both classes,
top-snippet retrieval quality per query, and stratified k-fold splits.

The "average" precision/recall here are support-weighted per-class
averages with precision defined as 0 for a class that receives no
predictions; under that convention an always-relevant predictor on
positive fraction p scores exactly (p^2, p, 2p^2/(1+p)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import Query, Snippet
from .errors import ValidationError
from .scoring import relevance_score

_CONSISTENCY_TOL = 1e-9


def classify(score: float, threshold: float) -> int:
    """1 iff score >= threshold (the boundary counts as relevant)."""
    if not math.isfinite(score):
        raise ValidationError(f"score must be finite, got {score!r}")
    if not math.isfinite(threshold):
        raise ValidationError(f"threshold must be finite, got {threshold!r}")
    return 1 if score >= threshold else 0


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name, value in (("tp", self.tp), ("fp", self.fp), ("tn", self.tn), ("fn", self.fn)):
            if value < 0:
                raise ValidationError(f"{name} must be nonnegative, got {value}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, predictions: Sequence[int], golds: Sequence[int]) -> "ConfusionMatrix":
        _check_binary_pairs(predictions, golds)
        tp = sum(1 for p, g in zip(predictions, golds) if p == 1 and g == 1)
        fp = sum(1 for p, g in zip(predictions, golds) if p == 1 and g == 0)
        tn = sum(1 for p, g in zip(predictions, golds) if p == 0 and g == 0)
        fn = sum(1 for p, g in zip(predictions, golds) if p == 0 and g == 1)
        return cls(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    avg_precision: float
    avg_recall: float
    weighted_f1: float
    per_class: dict[int, ClassMetrics]
    threshold: float | None = None

    def __post_init__(self) -> None:
        total = sum(m.support for m in self.per_class.values())
        if total <= 0:
            raise ValidationError("metrics report needs at least one evaluated pair")
        checks = (
            ("avg_precision", self.avg_precision, "precision"),
            ("avg_recall", self.avg_recall, "recall"),
            ("weighted_f1", self.weighted_f1, "f1"),
        )
        for name, value, attr in checks:
            expected = sum(getattr(m, attr) * m.support for m in self.per_class.values()) / total
            if abs(value - expected) > _CONSISTENCY_TOL:
                raise ValidationError(
                    f"{name} {value!r} inconsistent with per-class values (expected {expected!r})"
                )

    def to_dict(self) -> dict:
        return {
            "avg_precision": self.avg_precision,
            "avg_recall": self.avg_recall,
            "weighted_f1": self.weighted_f1,
            "threshold": self.threshold,
            "per_class": {
                str(label): {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in sorted(self.per_class.items())
            },
        }


def _check_binary_pairs(predictions: Sequence[int], golds: Sequence[int]) -> None:
    if len(predictions) != len(golds):
        raise ValidationError(
            f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds"
        )
    if not predictions:
        raise ValidationError("empty input")
    for value in predictions:
        if value not in (0, 1):
            raise ValidationError(f"predictions must be 0 or 1, got {value!r}")
    for value in golds:
        if value not in (0, 1):
            raise ValidationError(f"golds must be 0 or 1, got {value!r}")


def classification_metrics(
    predictions: Sequence[int], golds: Sequence[int], threshold: float | None = None
) -> MetricsReport:
    """Per-class precision/recall/F1 plus their support-weighted averages."""
    _check_binary_pairs(predictions, golds)
    per_class: dict[int, ClassMetrics] = {}
    total = len(golds)
    for label in (0, 1):
        true_positive = sum(1 for p, g in zip(predictions, golds) if p == label and g == label)
        predicted = sum(1 for p in predictions if p == label)
        support = sum(1 for g in golds if g == label)
        precision = true_positive / predicted if predicted else 0.0
        recall = true_positive / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=support)
    return MetricsReport(
        avg_precision=sum(m.precision * m.support for m in per_class.values()) / total,
        avg_recall=sum(m.recall * m.support for m in per_class.values()) / total,
        weighted_f1=sum(m.f1 * m.support for m in per_class.values()) / total,
        per_class=per_class,
        threshold=threshold,
    )


@dataclass(frozen=True)
class RetrievalStats:
    queries: int
    pairs: int
    relevant: int
    snippet_relevance_pct: float
    pct_at_least_one: float
    avg_relevant: float


@dataclass(frozen=True)
class RetrievalReport:
    snippet_relevance_pct: float
    pct_at_least_one: float
    avg_relevant: float
    queries: int
    pairs: int
    relevant: int
    breakdown: dict[str, RetrievalStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def stats_dict(s: RetrievalStats) -> dict:
            return {
                "queries": s.queries,
                "pairs": s.pairs,
                "relevant": s.relevant,
                "snippet_relevance_pct": s.snippet_relevance_pct,
                "pct_at_least_one": s.pct_at_least_one,
                "avg_relevant": s.avg_relevant,
            }

        return {
            "snippet_relevance_pct": self.snippet_relevance_pct,
            "pct_at_least_one": self.pct_at_least_one,
            "avg_relevant": self.avg_relevant,
            "queries": self.queries,
            "pairs": self.pairs,
            "relevant": self.relevant,
            "breakdown": {cat: stats_dict(s) for cat, s in sorted(self.breakdown.items())},
        }


def _retrieval_stats(label_lists: Sequence[Sequence[int]]) -> RetrievalStats:
    queries = len(label_lists)
    pairs = sum(len(labels) for labels in label_lists)
    relevant = sum(sum(labels) for labels in label_lists)
    with_hit = sum(1 for labels in label_lists if any(labels))
    return RetrievalStats(
        queries=queries,
        pairs=pairs,
        relevant=relevant,
        snippet_relevance_pct=100.0 * relevant / pairs if pairs else 0.0,
        pct_at_least_one=100.0 * with_hit / queries,
        avg_relevant=relevant / queries,
    )


def retrieval_metrics(
    labels_by_query: Mapping[str, Sequence[int]],
    categories: Mapping[str, str] | None = None,
    k_snippets: int | None = None,
) -> RetrievalReport:
    """Micro snippet relevance, percent of queries with at least one relevant
    snippet, and mean relevant snippets per query, with category breakdowns."""
    if not labels_by_query:
        raise ValidationError("empty input")
    for query_id, labels in labels_by_query.items():
        if k_snippets is not None and len(labels) > k_snippets:
            raise ValidationError(
                f"query {query_id!r} has {len(labels)} labels, more than k={k_snippets}"
            )
        for value in labels:
            if value not in (0, 1):
                raise ValidationError(f"query {query_id!r}: labels must be 0 or 1, got {value!r}")
    overall = _retrieval_stats(list(labels_by_query.values()))
    grouped: dict[str, list[Sequence[int]]] = {}
    for query_id, labels in labels_by_query.items():
        category = categories.get(query_id, "uncategorized") if categories else "uncategorized"
        grouped.setdefault(category, []).append(labels)
    return RetrievalReport(
        snippet_relevance_pct=overall.snippet_relevance_pct,
        pct_at_least_one=overall.pct_at_least_one,
        avg_relevant=overall.avg_relevant,
        queries=overall.queries,
        pairs=overall.pairs,
        relevant=overall.relevant,
        breakdown={cat: _retrieval_stats(lists) for cat, lists in grouped.items()},
    )


def kfold_splits(
    pairs: Sequence,
    k: int = 10,
    *,
    seed: int,
    stratify: bool = True,
    key: Callable | None = None,
) -> list[list]:
    """Disjoint, seeded folds with sizes differing by at most one; stratified
    folds also balance per-fold label counts to within one of proportional."""
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if k > len(pairs):
        raise ValidationError(f"k={k} exceeds the number of pairs ({len(pairs)})")
    rng = np.random.Generator(np.random.PCG64(seed))
    folds: list[list] = [[] for _ in range(k)]
    if stratify:
        if key is None:
            key = lambda pair: pair.majority
        groups: dict = {}
        for pair in pairs:
            label = key(pair)
            if label is None:
                raise ValidationError("cannot stratify: a pair has no label")
            groups.setdefault(label, []).append(pair)
        offset = 0
        for label in sorted(groups):
            group = groups[label]
            order = rng.permutation(len(group))
            for i, j in enumerate(order):
                folds[(offset + i) % k].append(group[int(j)])
            offset = (offset + len(group)) % k
    else:
        order = rng.permutation(len(pairs))
        for i, j in enumerate(order):
            folds[i % k].append(pairs[int(j)])
    return folds


def evaluate_provider(
    provider,
    pairs: Sequence,
    threshold: float,
    *,
    queries: Mapping[str, Query],
    snippets: Mapping[str, Snippet],
) -> MetricsReport:
    """Classify every pair's provider score at the threshold and compare
    against the majority labels."""
    if not pairs:
        raise ValidationError("no pairs to evaluate")
    predictions: list[int] = []
    golds: list[int] = []
    for pair in pairs:
        if pair.majority is None:
            raise ValidationError(f"pair {pair.pair_id!r} has no majority label")
        if pair.query_id not in queries:
            raise KeyError(f"pair {pair.pair_id!r}: unknown query id {pair.query_id!r}")
        if pair.snippet_id not in snippets:
            raise KeyError(f"pair {pair.pair_id!r}: unknown snippet id {pair.snippet_id!r}")
        score = relevance_score(provider, queries[pair.query_id], snippets[pair.snippet_id])
        predictions.append(classify(score, threshold))
        golds.append(pair.majority)
    return classification_metrics(predictions, golds, threshold=threshold)
