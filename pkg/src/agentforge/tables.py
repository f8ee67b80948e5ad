"""Rendering evaluation reports as result tables (markdown or CSV).

The headline cell is "mean ± half-CI" in percent, matching how results are
usually quoted when comparing agent designs.
"""
from __future__ import annotations

import csv
import io
from typing import Sequence

from .records import METRIC_LABELS, EvalReport


def format_cell(report: EvalReport) -> str:
    half_width = (report.ci_high - report.ci_low) / 2.0
    return f"{report.aggregate * 100:.1f} ± {half_width * 100:.1f}"


def _score_header(reports: Sequence[EvalReport]) -> str:
    metrics = {r.metric for r in reports}
    if len(metrics) == 1:
        return METRIC_LABELS[next(iter(metrics))] + " (%)"
    return "Score (%)"


def render_markdown(named_reports: Sequence[tuple[str, EvalReport]]) -> str:
    if not named_reports:
        return "(no results)"
    header = _score_header([r for _, r in named_reports])
    lines = [
        f"| Agent | Domain | Split | {header} |",
        "| --- | --- | --- | --- |",
    ]
    for name, report in named_reports:
        lines.append(f"| {name} | {report.domain_id} | {report.split} | {format_cell(report)} |")
    return "\n".join(lines)


def render_csv(named_reports: Sequence[tuple[str, EvalReport]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["agent", "domain", "split", "metric", "mean", "ci_low", "ci_high", "cell"])
    for name, report in named_reports:
        writer.writerow(
            [
                name,
                report.domain_id,
                report.split,
                report.metric,
                f"{report.aggregate:.6f}",
                f"{report.ci_low:.6f}",
                f"{report.ci_high:.6f}",
                format_cell(report),
            ]
        )
    return buffer.getvalue()


def emit_results_table(named_reports: Sequence[tuple[str, EvalReport]], fmt: str = "markdown") -> str:
    if fmt == "markdown":
        return render_markdown(named_reports)
    if fmt == "csv":
        return render_csv(named_reports)
    raise ValueError(f"unknown table format {fmt!r}")
