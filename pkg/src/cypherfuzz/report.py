"""Report rendering: delimited metrics output plus matplotlib figures."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricsReport  # noqa: E402


def write_metrics_csv(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "length", "value"])
        writer.writerow(["queries_total", "", report.queries_total])
        if report.semantic_validity_rate is not None:
            writer.writerow(["semantic_validity_rate", "", report.semantic_validity_rate])
        if report.grammar_coverage is not None:
            writer.writerow(["grammar_coverage", "", report.grammar_coverage])
            writer.writerow(["covered_productions", "", report.covered_productions])
        writer.writerow(["registry_size", "", report.registry_size])
        if report.non_empty_rate is not None:
            writer.writerow(["non_empty_rate", "", report.non_empty_rate])
        for length, rate in sorted(report.non_empty_by_length.items()):
            writer.writerow(["non_empty_rate", length, rate])
        if report.graph_mutation_score is not None:
            writer.writerow(["graph_mutation_score", "", report.graph_mutation_score])
    return path


def write_figures(
    report: MetricsReport,
    coverage_points: list[tuple[int, float]],
    out_dir: str | Path,
) -> list[Path]:
    """Render the metric figures as PNG files next to the delimited output."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if report.non_empty_by_length:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        lengths = sorted(report.non_empty_by_length)
        rates = [report.non_empty_by_length[l] for l in lengths]
        ax.bar([str(l) for l in lengths], rates, color="#4878a8")
        ax.set_xlabel("query length (clauses)")
        ax.set_ylabel("non-empty result rate")
        ax.set_ylim(0, 1)
        ax.set_title("Non-empty results by query length")
        fig.tight_layout()
        path = out / "non_empty_by_length.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if coverage_points:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        xs = [p[0] for p in coverage_points]
        ys = [p[1] for p in coverage_points]
        ax.plot(xs, ys, color="#a84848")
        ax.axhline(1.0, linestyle=":", color="gray", linewidth=1)
        ax.set_xlabel("queries generated")
        ax.set_ylabel("grammar coverage")
        ax.set_ylim(0, 1.05)
        ax.set_title(f"Coverage of {report.registry_size} grammar productions")
        fig.tight_layout()
        path = out / "grammar_coverage.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
