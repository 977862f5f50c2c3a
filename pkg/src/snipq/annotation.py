"""Annotation pipeline: sample query-snippet pairs from rankings for manual
labeling, aggregate crowd labels by majority vote, run gold-probe quality
checks, and measure chance-corrected agreement.

Sampling draws from a numpy PCG64 generator seeded by the run seed together
with a sha256 of (query id, method name), so one seed yields decorrelated
but bit-reproducible draws across queries and scorers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Query
from .errors import ValidationError
from .ranking import RankedEntity

logger = logging.getLogger(__name__)

DEFAULT_HIT_SIZE = 23
DEFAULT_GOLD_COUNT = 3

LABEL_CSV_HEADER = ("pair_id", "query_id", "snippet_id", "annotator_id", "label")
PAIR_CSV_HEADER = ("pair_id", "query_text", "snippet_text")


@dataclass
class AnnotatedPair:
    """One (query, snippet) pair: per-annotator binary labels plus the
    majority label once voted."""

    pair_id: str
    query_id: str
    snippet_id: str
    source_method: str
    labels: dict[str, int] = field(default_factory=dict)
    majority: int | None = None


def make_pair_id(query_id: str, snippet_id: str) -> str:
    return f"{query_id}::{snippet_id}"


def _draw_rng(seed: int, query_id: str, method_name: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{query_id}\x1f{method_name}".encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, key])))


def sample_annotation_pairs(
    ranked: Sequence[RankedEntity],
    method_name: str,
    query: Query,
    seed: int,
    k_entities: int = 5,
    k_snippets: int = 5,
) -> list[AnnotatedPair]:
    """Pick one entity uniformly among the top-ranked few and emit its best
    snippets as unlabeled pairs tagged with the producing method."""
    if not ranked:
        raise ValidationError("empty ranking")
    if seed < 0:
        raise ValidationError(f"seed must be a nonnegative integer, got {seed}")
    if k_entities < 1 or k_snippets < 1:
        raise ValidationError("k_entities and k_snippets must be >= 1")
    rng = _draw_rng(seed, query.id, method_name)
    pool = ranked[: min(k_entities, len(ranked))]
    entity = pool[int(rng.integers(len(pool)))]
    return [
        AnnotatedPair(
            pair_id=make_pair_id(query.id, scored.snippet_id),
            query_id=query.id,
            snippet_id=scored.snippet_id,
            source_method=method_name,
        )
        for scored in entity.top_snippets[:k_snippets]
    ]


def dedupe_pairs(pairs: Iterable[AnnotatedPair]) -> list[AnnotatedPair]:
    """Merge pairs sharing (query_id, snippet_id); method tags are joined
    with "+" so totals stay auditable."""
    merged: dict[tuple[str, str], AnnotatedPair] = {}
    collisions = 0
    for pair in pairs:
        key = (pair.query_id, pair.snippet_id)
        existing = merged.get(key)
        if existing is None:
            merged[key] = pair
        else:
            methods = sorted(set(existing.source_method.split("+")) | set(pair.source_method.split("+")))
            existing.source_method = "+".join(methods)
            collisions += 1
    if collisions:
        logger.info("merged %d duplicate query-snippet pairs", collisions)
    return list(merged.values())


def majority_vote(labels: Mapping[str, int] | Sequence[int]) -> int:
    """The label held by more than half of an odd number (>= 3) of binary
    labels; invariant under annotator permutation."""
    values = list(labels.values()) if isinstance(labels, Mapping) else list(labels)
    count = len(values)
    if count < 3 or count % 2 == 0:
        raise ValidationError(f"majority vote needs an odd number of labels >= 3, got {count}")
    for value in values:
        if value not in (0, 1):
            raise ValidationError(f"labels must be 0 or 1, got {value!r}")
    return 1 if 2 * sum(values) > count else 0


@dataclass(frozen=True)
class HitSpec:
    """One crowd task: a block of pair ids with known-label gold probes
    embedded among them."""

    hit_id: str
    pair_ids: tuple[str, ...]
    gold_pairs: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.pair_ids)) != len(self.pair_ids):
            raise ValidationError(f"hit {self.hit_id}: duplicate pair ids")
        missing = set(self.gold_pairs) - set(self.pair_ids)
        if missing:
            raise ValidationError(f"hit {self.hit_id}: gold pairs {sorted(missing)} not in pair_ids")


def make_hits(
    pair_ids: Sequence[str],
    gold: Mapping[str, int],
    seed: int,
    hit_size: int = DEFAULT_HIT_SIZE,
    gold_count: int = DEFAULT_GOLD_COUNT,
) -> list[HitSpec]:
    """Chunk pairs into tasks of hit_size, each mixing in gold_count randomly
    chosen gold probes at seeded-random positions. The final task may be
    short when the pair count does not divide evenly."""
    if gold_count >= hit_size:
        raise ValidationError("gold_count must be smaller than hit_size")
    if len(gold) < gold_count:
        raise ValidationError(f"need at least {gold_count} gold pairs, got {len(gold)}")
    overlap = set(pair_ids) & set(gold)
    if overlap:
        raise ValidationError(f"gold pairs may not also be task pairs: {sorted(overlap)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    gold_ids = sorted(gold)
    per_hit = hit_size - gold_count
    hits: list[HitSpec] = []
    for start in range(0, len(pair_ids), per_hit):
        block = list(pair_ids[start : start + per_hit])
        chosen = [gold_ids[i] for i in rng.choice(len(gold_ids), size=gold_count, replace=False)]
        combined = block + chosen
        order = rng.permutation(len(combined))
        hits.append(
            HitSpec(
                hit_id=f"hit-{len(hits):04d}",
                pair_ids=tuple(combined[i] for i in order),
                gold_pairs=tuple(chosen),
            )
        )
    return hits


def quality_check(
    hit: HitSpec,
    submitted: Mapping[str, int],
    gold: Mapping[str, int],
    min_correct: int = DEFAULT_GOLD_COUNT,
) -> bool:
    """Pass iff the worker got at least min_correct of the hit's gold probes
    right (default: all of them)."""
    correct = 0
    for pair_id in hit.gold_pairs:
        if pair_id not in gold:
            raise ValidationError(f"no known label for gold pair {pair_id!r}")
        if pair_id not in submitted:
            raise ValidationError(f"submission is missing gold pair {pair_id!r}")
        if submitted[pair_id] == gold[pair_id]:
            correct += 1
    return correct >= min_correct


def fleiss_kappa(ratings, raters_per_item: int | None = None) -> float:
    """Chance-corrected multi-rater agreement over an items x categories
    count matrix where every row sums to the rater count."""
    matrix = np.asarray(ratings)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValidationError("ratings must be a nonempty items x categories matrix")
    if not np.issubdtype(matrix.dtype, np.integer):
        raise ValidationError("ratings must be integer counts")
    if (matrix < 0).any():
        raise ValidationError("ratings must be nonnegative")
    row_sums = matrix.sum(axis=1)
    n = int(row_sums[0]) if raters_per_item is None else raters_per_item
    if n < 2:
        raise ValidationError(f"need at least 2 raters per item, got {n}")
    if not (row_sums == n).all():
        raise ValidationError(f"every row must sum to {n} raters")
    per_item = (matrix * (matrix - 1)).sum(axis=1) / (n * (n - 1))
    observed = float(per_item.mean())
    proportions = matrix.sum(axis=0) / matrix.sum()
    expected = float((proportions**2).sum())
    if expected >= 1.0:
        raise ValidationError("degenerate: chance agreement is 1")
    return (observed - expected) / (1.0 - expected)


def annotator_vs_majority_kappa(pairs: Sequence[AnnotatedPair], annotator_id: str) -> float:
    """Two-rater agreement between one annotator and the majority label,
    computed with the multi-rater formula over their shared pairs."""
    rows: list[list[int]] = []
    for pair in pairs:
        if pair.majority is None or annotator_id not in pair.labels:
            continue
        row = [0, 0]
        row[pair.labels[annotator_id]] += 1
        row[pair.majority] += 1
        rows.append(row)
    if not rows:
        raise ValidationError(f"annotator {annotator_id!r} has no labeled pairs with a majority")
    return fleiss_kappa(np.asarray(rows, dtype=int), raters_per_item=2)


@dataclass(frozen=True)
class LabelRow:
    pair_id: str
    query_id: str
    snippet_id: str
    annotator_id: str
    label: int


def load_label_csv(path: str | Path) -> list[LabelRow]:
    """Read the annotation label CSV, validating labels and duplicates."""
    rows: list[LabelRow] = []
    seen: set[tuple[str, str]] = set()
    pair_fields: dict[str, tuple[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: missing header row") from None
        if tuple(header) != LABEL_CSV_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(LABEL_CSV_HEADER)}, got {','.join(header)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValidationError(f"{path}:{line_no}: expected 5 columns")
            pair_id, query_id, snippet_id, annotator_id, raw_label = row
            if raw_label not in ("0", "1"):
                raise ValidationError(f"{path}:{line_no}: label must be 0 or 1, got {raw_label!r}")
            key = (pair_id, annotator_id)
            if key in seen:
                raise ValidationError(
                    f"{path}:{line_no}: duplicate label for pair {pair_id!r} by {annotator_id!r}"
                )
            seen.add(key)
            ids = (query_id, snippet_id)
            if pair_fields.setdefault(pair_id, ids) != ids:
                raise ValidationError(
                    f"{path}:{line_no}: pair {pair_id!r} has inconsistent query/snippet ids"
                )
            rows.append(LabelRow(pair_id, query_id, snippet_id, annotator_id, int(raw_label)))
    return rows


def aggregate_labels(
    rows: Sequence[LabelRow], pairs: Sequence[AnnotatedPair] | None = None
) -> list[AnnotatedPair]:
    """Attach labels to pairs and set each labeled pair's majority. When a
    sampled pair list is given, labels must reference it; pairs left
    unlabeled keep majority unset."""
    if pairs is not None:
        out = [
            AnnotatedPair(p.pair_id, p.query_id, p.snippet_id, p.source_method, dict(p.labels), p.majority)
            for p in pairs
        ]
    else:
        out = []
    index = {pair.pair_id: pair for pair in out}
    for row in rows:
        pair = index.get(row.pair_id)
        if pair is None:
            if pairs is not None:
                raise ValidationError(f"label references unknown pair {row.pair_id!r}")
            pair = AnnotatedPair(row.pair_id, row.query_id, row.snippet_id, "unspecified")
            out.append(pair)
            index[row.pair_id] = pair
        pair.labels[row.annotator_id] = row.label
    for pair in out:
        if pair.labels:
            try:
                pair.majority = majority_vote(pair.labels)
            except ValidationError as exc:
                raise ValidationError(f"pair {pair.pair_id!r}: {exc}") from None
    return out


def pair_to_dict(pair: AnnotatedPair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "query_id": pair.query_id,
        "snippet_id": pair.snippet_id,
        "source_method": pair.source_method,
        "labels": dict(sorted(pair.labels.items())),
        "majority": pair.majority,
    }


def pair_from_dict(raw: Mapping) -> AnnotatedPair:
    try:
        labels = {str(k): int(v) for k, v in raw.get("labels", {}).items()}
        majority = raw.get("majority")
        return AnnotatedPair(
            pair_id=raw["pair_id"],
            query_id=raw["query_id"],
            snippet_id=raw["snippet_id"],
            source_method=raw.get("source_method", "unspecified"),
            labels=labels,
            majority=None if majority is None else int(majority),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed pair record: {exc}") from None


def write_pairs_jsonl(pairs: Sequence[AnnotatedPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(json.dumps(pair_to_dict(pair), ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def read_pairs_jsonl(path: str | Path) -> list[AnnotatedPair]:
    pairs: list[AnnotatedPair] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from None
            try:
                pairs.append(pair_from_dict(raw))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{line_no}: {exc}") from None
    return pairs


def export_pairs_csv(
    pairs: Sequence[AnnotatedPair],
    query_texts: Mapping[str, str],
    snippet_texts: Mapping[str, str],
    path: str | Path,
    seed: int,
) -> None:
    """Write pair_id,query_text,snippet_text in seeded-random order for
    crowd annotation."""
    for pair in pairs:
        if pair.query_id not in query_texts:
            raise KeyError(f"no text for query id {pair.query_id!r}")
        if pair.snippet_id not in snippet_texts:
            raise KeyError(f"no text for snippet id {pair.snippet_id!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(pairs))
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(PAIR_CSV_HEADER)
        for i in order:
            pair = pairs[int(i)]
            writer.writerow([pair.pair_id, query_texts[pair.query_id], snippet_texts[pair.snippet_id]])
