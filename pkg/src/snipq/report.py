"""Report rendering: aligned plain-text tables, delimited CSV files, and
matplotlib figures for metric and agreement reports.

Percentages print with one decimal, score-like metrics with three, matching
the result tables this package reproduces.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import MetricsReport, RetrievalReport

_CLASS_NAMES = {0: "not relevant", 1: "relevant"}


def _format_rows(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def metrics_table(report: MetricsReport) -> str:
    rows = [["Class", "Avg Precision", "Avg Recall", "Weighted F1", "Support"]]
    for label, m in sorted(report.per_class.items()):
        rows.append(
            [
                _CLASS_NAMES[label],
                f"{m.precision:.3f}",
                f"{m.recall:.3f}",
                f"{m.f1:.3f}",
                str(m.support),
            ]
        )
    total = sum(m.support for m in report.per_class.values())
    rows.append(
        [
            "weighted",
            f"{report.avg_precision:.3f}",
            f"{report.avg_recall:.3f}",
            f"{report.weighted_f1:.3f}",
            str(total),
        ]
    )
    return _format_rows(rows)


def write_metrics_csv(report: MetricsReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "precision", "recall", "f1", "support"])
        for label, m in sorted(report.per_class.items()):
            writer.writerow([label, f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}", m.support])
        total = sum(m.support for m in report.per_class.values())
        writer.writerow(
            [
                "weighted",
                f"{report.avg_precision:.6f}",
                f"{report.avg_recall:.6f}",
                f"{report.weighted_f1:.6f}",
                total,
            ]
        )


def render_metrics_figure(report: MetricsReport, path: str | Path) -> None:
    """Grouped bars of precision/recall/F1 per class plus the weighted row."""
    groups = [_CLASS_NAMES[label] for label in sorted(report.per_class)] + ["weighted"]
    precision = [report.per_class[label].precision for label in sorted(report.per_class)] + [
        report.avg_precision
    ]
    recall = [report.per_class[label].recall for label in sorted(report.per_class)] + [
        report.avg_recall
    ]
    f1 = [report.per_class[label].f1 for label in sorted(report.per_class)] + [report.weighted_f1]
    x = range(len(groups))
    width = 0.25
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar([i - width for i in x], precision, width, label="precision")
    ax.bar(list(x), recall, width, label="recall")
    ax.bar([i + width for i in x], f1, width, label="F1")
    ax.set_xticks(list(x))
    ax.set_xticklabels(groups)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    title = "Relevance classification"
    if report.threshold is not None:
        title += f" (threshold {report.threshold:g})"
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def retrieval_table(report: RetrievalReport) -> str:
    rows = [
        [
            "Category",
            "Queries",
            "Snippet Relevance",
            "% with at least one relevant",
            "Avg relevant snippets",
        ]
    ]

    def row(name: str, queries: int, pct: float, at_least_one: float, avg: float) -> list[str]:
        return [name, str(queries), f"{pct:.1f}%", f"{at_least_one:.1f}%", f"{avg:.2f}"]

    rows.append(
        row(
            "all",
            report.queries,
            report.snippet_relevance_pct,
            report.pct_at_least_one,
            report.avg_relevant,
        )
    )
    for category, stats in sorted(report.breakdown.items()):
        rows.append(
            row(
                category,
                stats.queries,
                stats.snippet_relevance_pct,
                stats.pct_at_least_one,
                stats.avg_relevant,
            )
        )
    return _format_rows(rows)


def write_retrieval_csv(report: RetrievalReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["category", "queries", "pairs", "relevant", "snippet_relevance_pct", "pct_at_least_one", "avg_relevant"]
        )
        writer.writerow(
            [
                "all",
                report.queries,
                report.pairs,
                report.relevant,
                f"{report.snippet_relevance_pct:.4f}",
                f"{report.pct_at_least_one:.4f}",
                f"{report.avg_relevant:.6f}",
            ]
        )
        for category, stats in sorted(report.breakdown.items()):
            writer.writerow(
                [
                    category,
                    stats.queries,
                    stats.pairs,
                    stats.relevant,
                    f"{stats.snippet_relevance_pct:.4f}",
                    f"{stats.pct_at_least_one:.4f}",
                    f"{stats.avg_relevant:.6f}",
                ]
            )


def render_retrieval_figure(report: RetrievalReport, path: str | Path) -> None:
    """Bars of snippet relevance percent overall and per query category."""
    names = ["all"] + sorted(report.breakdown)
    values = [report.snippet_relevance_pct] + [
        report.breakdown[name].snippet_relevance_pct for name in sorted(report.breakdown)
    ]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(names, values)
    ax.set_ylim(0, 100)
    ax.set_ylabel("snippet relevance (%)")
    ax.set_title("Top-snippet relevance by query category")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def kappa_table(per_annotator: Mapping[str, float], overall: float | None) -> str:
    rows = [["Annotator", "Kappa vs majority"]]
    for annotator, value in sorted(per_annotator.items()):
        rows.append([annotator, f"{value:.3f}"])
    if overall is not None:
        rows.append(["all raters", f"{overall:.3f}"])
    return _format_rows(rows)


def write_kappa_csv(per_annotator: Mapping[str, float], overall: float | None, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["annotator", "kappa"])
        for annotator, value in sorted(per_annotator.items()):
            writer.writerow([annotator, f"{value:.6f}"])
        if overall is not None:
            writer.writerow(["all raters", f"{overall:.6f}"])


def render_kappa_figure(per_annotator: Mapping[str, float], path: str | Path) -> None:
    names = sorted(per_annotator)
    values = [per_annotator[name] for name in names]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(names, values)
    ax.set_ylim(-1.0, 1.0)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("kappa vs majority")
    ax.set_title("Annotator agreement with the majority label")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
