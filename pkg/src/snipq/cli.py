"""Command-line pipeline: ingest the database, rank entities for queries,
sample pairs for annotation, aggregate labels, measure agreement, and score
providers against the labels.

Exit codes: 0 success, 1 data/validation error, 2 I/O error, 3 empty-result
conditions. Every randomized command requires an explicit --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import requests

from . import annotation, evaluation, ranking
from .corpus import DEFAULT_MIN_RATING, EntityDatabase, Query, load_corpus, load_queries
from .embedding import EncoderClient, fetch_embeddings, fetch_health, load_embeddings, save_embeddings
from .errors import EmptyResultError, ValidationError
from .scoring import (
    EmbeddingCosineProvider,
    EncoderServiceProvider,
    TableProvider,
    TfIdfProvider,
    load_score_table,
    load_three_way_table,
)
from .tfidf import build_index, save_index

ENCODER_URL_ENV = "SNIPQ_ENCODER_URL"

PROVIDER_KINDS = ("tfidf", "embedding", "table", "three-way-table", "service")


@dataclass
class RunConfig:
    """Shared invocation state resolved from the command line."""

    corpus: Path | None = None
    queries: Path | None = None
    provider: str = "tfidf"
    embeddings: Path | None = None
    table: Path | None = None
    service_url: str | None = None
    top_snippets: int = 5
    top_items: int = 5
    strict_average: bool = False
    threshold: float = 0.5
    seed: int | None = None
    out_dir: Path | None = None
    min_rating: int = DEFAULT_MIN_RATING

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        config = cls()
        for name in (
            "corpus",
            "queries",
            "provider",
            "embeddings",
            "table",
            "service_url",
            "threshold",
            "seed",
            "out_dir",
            "min_rating",
            "strict_average",
        ):
            if hasattr(args, name) and getattr(args, name) is not None:
                setattr(config, name, getattr(args, name))
        if getattr(args, "top_snippets", None) is not None:
            config.top_snippets = args.top_snippets
        if getattr(args, "top_items", None) is not None:
            config.top_items = args.top_items
        return config

    def ranking_params(self) -> ranking.RankingParams:
        return ranking.RankingParams(
            top_snippets=self.top_snippets,
            top_items=self.top_items,
            strict_average=self.strict_average,
        )


def _resolve_service_url(explicit: str | None) -> str:
    url = explicit or os.environ.get(ENCODER_URL_ENV)
    if not url:
        raise ValidationError(
            f"no encoder service URL: pass --service-url or set {ENCODER_URL_ENV}"
        )
    return url


def build_provider(kind: str, config: RunConfig, database: EntityDatabase | None, resource: str | None = None):
    """Construct a score provider; table-like kinds take their path from
    `resource` or the config."""
    if kind == "tfidf":
        if database is None or not database.snippets:
            raise ValidationError("tfidf provider needs a corpus with snippets")
        return TfIdfProvider(build_index(database.snippets))
    if kind == "embedding":
        path = resource or config.embeddings
        if not path:
            raise ValidationError("embedding provider needs --embeddings PATH")
        return EmbeddingCosineProvider(load_embeddings(path))
    if kind == "table":
        path = resource or config.table
        if not path:
            raise ValidationError("table provider needs --table PATH")
        return TableProvider(load_score_table(path))
    if kind == "three-way-table":
        path = resource or config.table
        if not path:
            raise ValidationError("three-way-table provider needs --table PATH")
        return TableProvider(load_three_way_table(path))
    if kind == "service":
        url = _resolve_service_url(resource or config.service_url)
        return EncoderServiceProvider(EncoderClient(base_url=url))
    raise ValidationError(f"unknown provider kind {kind!r} (choose from {PROVIDER_KINDS})")


def _parse_method(spec: str) -> tuple[str, str, str | None]:
    """Parse [NAME=]KIND[:RESOURCE] into (name, kind, resource)."""
    name, eq, rest = spec.partition("=")
    if not eq:
        name, rest = "", spec
    kind, colon, resource = rest.partition(":")
    if kind not in PROVIDER_KINDS:
        raise ValidationError(f"unknown provider kind {kind!r} in method {spec!r}")
    return name or kind, kind, resource if colon else None


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def cmd_ingest(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    database = load_corpus(config.corpus, min_rating=config.min_rating)
    if not database.entities:
        raise ValidationError("empty corpus")
    vocabulary_size = 0
    if database.snippets:
        index = build_index(database.snippets)
        vocabulary_size = len(index.vocabulary)
        if args.save_index:
            save_index(index, args.save_index)
    print(f"entities: {len(database.entities)}")
    print(f"snippets: {len(database.snippets)}")
    print(f"vocabulary: {vocabulary_size}")
    return 0


def _lookup_query(queries: list[Query], query_id: str) -> Query:
    for query in queries:
        if query.id == query_id:
            return query
    raise ValidationError(f"unknown query id {query_id!r}")


def cmd_rank(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    database = load_corpus(config.corpus, min_rating=config.min_rating)
    provider = build_provider(config.provider, config, database)
    params = config.ranking_params()
    if args.interactive:
        if args.hybrid:
            raise ValidationError("interactive mode does not support --hybrid")
        if config.provider not in ("tfidf", "service"):
            raise ValidationError(
                "interactive mode needs a text-scoring provider (tfidf or service)"
            )
        for i, line in enumerate(sys.stdin):
            text = line.strip()
            if not text:
                continue
            query = Query(id=f"interactive-{i}", text=text)
            ranked = ranking.rank_and_select(provider, query, database, params)
            for rank_pos, item in enumerate(ranked, start=1):
                entity = database.entity(item.entity_id)
                print(f"{rank_pos}. {entity.name} ({item.entity_id})  score={item.item_score:.4f}")
                for scored in item.top_snippets:
                    snippet = database.snippet(scored.snippet_id)
                    print(f"     [{scored.score:.4f}] {snippet.text}")
        return 0
    if config.queries is None:
        raise ValidationError("rank needs --queries (or --interactive)")
    if args.query_id is None:
        raise ValidationError("rank needs --query-id (or --interactive)")
    queries = load_queries(config.queries)
    query = _lookup_query(queries, args.query_id)
    if args.hybrid:
        ranked = ranking.rank_hybrid(provider, query, database, params)
    else:
        ranked = ranking.rank_and_select(provider, query, database, params)
    _print_json(ranking.ranked_to_dicts(ranked))
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    database = load_corpus(config.corpus, min_rating=config.min_rating)
    queries = load_queries(config.queries)
    if not queries:
        raise ValidationError("empty query file")
    params = config.ranking_params()
    methods = [_parse_method(spec) for spec in (args.method or ["tfidf"])]
    names = [name for name, _, _ in methods]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate method names: {names}")

    pairs: list[annotation.AnnotatedPair] = []
    for name, kind, resource in methods:
        provider = build_provider(kind, config, database, resource)
        for query in queries:
            ranked = ranking.rank_and_select(provider, query, database, params)
            pairs.extend(
                annotation.sample_annotation_pairs(
                    ranked, name, query, config.seed, args.k_entities, args.k_snippets
                )
            )
        if args.hybrid:
            for query in queries:
                if not query.slot_constraints:
                    continue
                ranked = ranking.rank_hybrid(provider, query, database, params)
                pairs.extend(
                    annotation.sample_annotation_pairs(
                        ranked, f"{name}-hybrid", query, config.seed, args.k_entities, args.k_snippets
                    )
                )
    before = len(pairs)
    pairs = annotation.dedupe_pairs(pairs)

    out_dir = config.out_dir or Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    annotation.write_pairs_jsonl(pairs, out_dir / "pairs.jsonl")
    query_texts = {query.id: query.text for query in queries}
    snippet_texts = {snippet.id: snippet.text for snippet in database.snippets}
    annotation.export_pairs_csv(
        pairs, query_texts, snippet_texts, out_dir / "pairs.csv", config.seed
    )
    print(f"methods: {len(methods)}")
    print(f"queries: {len(queries)}")
    print(f"pairs: {len(pairs)}")
    if before != len(pairs):
        print(f"merged duplicates: {before - len(pairs)}")
    return 0


def cmd_vote(args: argparse.Namespace) -> int:
    rows = annotation.load_label_csv(args.labels)
    sampled = annotation.read_pairs_jsonl(args.pairs) if args.pairs else None
    pairs = annotation.aggregate_labels(rows, sampled)
    annotation.write_pairs_jsonl(pairs, args.out)
    voted = [pair for pair in pairs if pair.majority is not None]
    positives = sum(pair.majority for pair in voted)
    print(f"pairs: {len(pairs)}")
    print(f"voted: {len(voted)}")
    print(f"relevant: {positives}")
    print(f"not relevant: {len(voted) - positives}")
    return 0


def cmd_kappa(args: argparse.Namespace) -> int:
    pairs = annotation.read_pairs_jsonl(args.pairs)
    labeled = [pair for pair in pairs if pair.labels and pair.majority is not None]
    if not labeled:
        raise EmptyResultError("no labeled pairs with a majority")
    annotators = sorted({a for pair in labeled for a in pair.labels})
    per_annotator = {a: annotation.annotator_vs_majority_kappa(labeled, a) for a in annotators}
    rater_counts = {len(pair.labels) for pair in labeled}
    overall = None
    if len(rater_counts) == 1 and next(iter(rater_counts)) >= 2:
        rows = []
        for pair in labeled:
            row = [0, 0]
            for label in pair.labels.values():
                row[label] += 1
            rows.append(row)
        try:
            overall = annotation.fleiss_kappa(rows)
        except ValidationError:
            overall = None
    _print_json({"overall": overall, "per_annotator": per_annotator})
    if args.out_dir:
        from . import report

        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.write_kappa_csv(per_annotator, overall, out_dir / "kappa.csv")
        report.render_kappa_figure(per_annotator, out_dir / "kappa.png")
    return 0


def _mean_report_dict(reports: list[evaluation.MetricsReport]) -> dict:
    n = len(reports)
    return {
        "avg_precision": sum(r.avg_precision for r in reports) / n,
        "avg_recall": sum(r.avg_recall for r in reports) / n,
        "weighted_f1": sum(r.weighted_f1 for r in reports) / n,
    }


def cmd_eval(args: argparse.Namespace) -> int:
    from . import report

    config = RunConfig.from_args(args)
    database = load_corpus(config.corpus, min_rating=config.min_rating)
    queries = load_queries(config.queries)
    pairs = annotation.read_pairs_jsonl(args.pairs)
    if not pairs:
        raise ValidationError("empty pairs file")
    provider = build_provider(config.provider, config, database)
    queries_by_id = {query.id: query for query in queries}
    snippets_by_id = {snippet.id: snippet for snippet in database.snippets}

    payload: dict = {"provider": config.provider, "threshold": config.threshold}
    if args.kfold:
        if config.seed is None:
            raise ValidationError("--kfold requires --seed")
        folds = evaluation.kfold_splits(
            pairs, args.kfold, seed=config.seed, stratify=not args.no_stratify
        )
        fold_reports = [
            evaluation.evaluate_provider(
                provider, fold, config.threshold, queries=queries_by_id, snippets=snippets_by_id
            )
            for fold in folds
        ]
        payload["folds"] = [r.to_dict() for r in fold_reports]
        payload["mean"] = _mean_report_dict(fold_reports)
    metrics = evaluation.evaluate_provider(
        provider, pairs, config.threshold, queries=queries_by_id, snippets=snippets_by_id
    )
    payload["metrics"] = metrics.to_dict()

    retrieval = None
    if args.retrieval:
        labels_by_query: dict[str, list[int]] = {}
        for pair in pairs:
            if pair.majority is None:
                raise ValidationError(f"pair {pair.pair_id!r} has no majority label")
            labels_by_query.setdefault(pair.query_id, []).append(pair.majority)
        categories = {query.id: query.category for query in queries}
        retrieval = evaluation.retrieval_metrics(labels_by_query, categories)
        payload["retrieval"] = retrieval.to_dict()

    print(report.metrics_table(metrics))
    if retrieval is not None:
        print()
        print(report.retrieval_table(retrieval))

    if config.out_dir:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "metrics.json", "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, ensure_ascii=False)
            handle.write("\n")
        report.write_metrics_csv(metrics, out_dir / "metrics.csv")
        report.render_metrics_figure(metrics, out_dir / "metrics.png")
        if retrieval is not None:
            report.write_retrieval_csv(retrieval, out_dir / "retrieval.csv")
            report.render_retrieval_figure(retrieval, out_dir / "retrieval.png")
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    url = _resolve_service_url(config.service_url)
    client = EncoderClient(base_url=url, timeout=args.timeout)
    health = fetch_health(client)
    database = load_corpus(config.corpus, min_rating=config.min_rating)
    queries = load_queries(config.queries)
    items: list[tuple[str, str]] = [(query.id, query.text) for query in queries]
    items.extend((snippet.id, snippet.text) for snippet in database.snippets)
    if not items:
        raise ValidationError("nothing to encode: corpus and query file are empty")
    records: list[tuple[str, list[float]]] = []
    batch = max(1, args.batch_size)
    for start in range(0, len(items), batch):
        chunk = items[start : start + batch]
        vectors = fetch_embeddings(client, [text for _, text in chunk])
        records.extend((key, vector.tolist()) for (key, _), vector in zip(chunk, vectors))
    save_embeddings(records, args.out)
    print(f"model: {health.get('model', 'unknown')}")
    print(f"encoded: {len(records)}")
    print(f"dimension: {len(records[0][1])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snipq",
        description=(
            "Retrieve database entities for natural-language queries by scoring "
            "unstructured text snippets, and reproduce the annotation/evaluation pipeline."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_corpus(p: argparse.ArgumentParser) -> None:
        p.add_argument("--corpus", type=Path, required=True, help="entity JSON-Lines file")
        p.add_argument(
            "--min-rating",
            type=int,
            default=DEFAULT_MIN_RATING,
            dest="min_rating",
            help="lowest review rating kept as a snippet (default 4)",
        )

    def add_queries(p: argparse.ArgumentParser) -> None:
        p.add_argument("--queries", type=Path, required=True, help="query JSON-Lines file")

    def add_provider(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--provider",
            choices=PROVIDER_KINDS,
            default="tfidf",
            help="relevance scorer backing the command (default tfidf)",
        )
        p.add_argument("--embeddings", type=Path, help="embedding JSON-Lines file (embedding provider)")
        p.add_argument("--table", type=Path, help="score CSV (table / three-way-table providers)")
        p.add_argument("--service-url", dest="service_url", help=f"encoder service URL (or ${ENCODER_URL_ENV})")

    def add_params(p: argparse.ArgumentParser) -> None:
        p.add_argument("-J", type=int, default=5, dest="top_snippets", metavar="N",
                       help="snippets averaged per entity (default 5)")
        p.add_argument("-N", type=int, default=5, dest="top_items", metavar="N",
                       help="entities returned (default 5)")
        p.add_argument(
            "--strict-average",
            action="store_true",
            dest="strict_average",
            help="divide by -J even when an entity has fewer snippets",
        )

    p_ingest = sub.add_parser("ingest", help="load and validate the corpus, print counts")
    add_corpus(p_ingest)
    p_ingest.add_argument("--save-index", type=Path, help="persist the TF-IDF index to this path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_rank = sub.add_parser("rank", help="rank entities for a query")
    add_corpus(p_rank)
    p_rank.add_argument("--queries", type=Path, help="query JSON-Lines file")
    add_provider(p_rank)
    add_params(p_rank)
    p_rank.add_argument("--query-id", dest="query_id", help="id of the query to rank")
    p_rank.add_argument("--hybrid", action="store_true", help="pre-filter on the query's slot constraints")
    p_rank.add_argument(
        "--interactive", action="store_true", help="read one query text per stdin line"
    )
    p_rank.set_defaults(func=cmd_rank)

    p_sample = sub.add_parser("sample", help="sample query-snippet pairs for annotation")
    add_corpus(p_sample)
    add_queries(p_sample)
    add_params(p_sample)
    p_sample.add_argument("--seed", type=int, required=True, help="sampling seed (required)")
    p_sample.add_argument(
        "--method",
        action="append",
        metavar="[NAME=]KIND[:RESOURCE]",
        help="scoring method, repeatable (default: tfidf)",
    )
    p_sample.add_argument("--hybrid", action="store_true",
                          help="also sample slot-constrained queries over the filtered database")
    p_sample.add_argument("--k-entities", type=int, default=5, dest="k_entities",
                          help="entity pool size sampled from (default 5)")
    p_sample.add_argument("--k-snippets", type=int, default=5, dest="k_snippets",
                          help="snippets emitted per sampled entity (default 5)")
    p_sample.add_argument("--out-dir", type=Path, dest="out_dir", required=True,
                          help="directory for pairs.jsonl and pairs.csv")
    p_sample.add_argument("--embeddings", type=Path, help="embedding file for embedding methods")
    p_sample.add_argument("--table", type=Path, help="score CSV for table methods")
    p_sample.add_argument("--service-url", dest="service_url")
    p_sample.set_defaults(func=cmd_sample)

    p_vote = sub.add_parser("vote", help="aggregate annotator labels by majority vote")
    p_vote.add_argument("--labels", type=Path, required=True, help="label CSV")
    p_vote.add_argument("--pairs", type=Path, help="sampled pairs.jsonl to attach labels to")
    p_vote.add_argument("--out", type=Path, required=True, help="aggregated pairs JSON-Lines output")
    p_vote.set_defaults(func=cmd_vote)

    p_kappa = sub.add_parser("kappa", help="agreement between each annotator and the majority")
    p_kappa.add_argument("--pairs", type=Path, required=True, help="aggregated pairs JSON-Lines")
    p_kappa.add_argument("--out-dir", type=Path, dest="out_dir", help="write kappa.csv and kappa.png here")
    p_kappa.set_defaults(func=cmd_kappa)

    p_eval = sub.add_parser("eval", help="threshold-classify provider scores against majority labels")
    add_corpus(p_eval)
    add_queries(p_eval)
    add_provider(p_eval)
    p_eval.add_argument("--pairs", type=Path, required=True, help="aggregated pairs JSON-Lines")
    p_eval.add_argument("--threshold", type=float, default=0.5, help="relevance threshold (default 0.5)")
    p_eval.add_argument("--kfold", type=int, help="also evaluate over k seeded folds")
    p_eval.add_argument("--no-stratify", action="store_true", dest="no_stratify",
                        help="plain shuffled folds instead of stratified ones")
    p_eval.add_argument("--seed", type=int, help="fold seed (required with --kfold)")
    p_eval.add_argument("--retrieval", action="store_true",
                        help="also report per-query top-snippet retrieval metrics")
    p_eval.add_argument("--out-dir", type=Path, dest="out_dir",
                        help="write metrics.json/.csv/.png (and retrieval.*) here")
    p_eval.set_defaults(func=cmd_eval)

    p_encode = sub.add_parser("encode", help="populate an embedding file via the encoder service")
    add_corpus(p_encode)
    add_queries(p_encode)
    p_encode.add_argument("--service-url", dest="service_url",
                          help=f"encoder service URL (or ${ENCODER_URL_ENV})")
    p_encode.add_argument("--out", type=Path, required=True, help="embedding JSON-Lines output")
    p_encode.add_argument("--batch-size", type=int, default=64, dest="batch_size")
    p_encode.add_argument("--timeout", type=float, default=60.0)
    p_encode.set_defaults(func=cmd_encode)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EmptyResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except KeyError as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except requests.RequestException as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
