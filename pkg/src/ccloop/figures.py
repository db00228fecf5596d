"""Render the report figures to PNG files next to the CSV tables.

All figures draw from the same ReportData the CSV writers use, with the
Agg backend and no embedded software metadata, so regeneration is
byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ccloop.loop import MODE_AGENT, MODE_BASELINE  # noqa: E402
from ccloop.reports import BUCKET_ORDER, ReportData  # noqa: E402

_SAVE_OPTS = {"dpi": 120, "metadata": {"Software": None}}


def render_figures(data: ReportData, figures_dir: Path) -> list[Path]:
    figures_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, renderer in (
        ("success_rates.png", _success_rates),
        ("iteration_histogram.png", _iteration_histogram),
        ("improvement_buckets.png", _improvement_buckets),
        ("failure_categories.png", _failure_categories),
        ("mismatch_languages.png", _mismatch_languages),
    ):
        path = figures_dir / name
        if renderer(data, path):
            written.append(path)
    return written


def _grouped_bars(ax, labels, series, series_labels, width=0.38):
    positions = range(len(labels))
    for offset, (values, label) in enumerate(zip(series, series_labels)):
        ax.bar(
            [p + (offset - (len(series) - 1) / 2) * width for p in positions],
            values,
            width=width,
            label=label,
        )
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.legend()


def _success_rates(data: ReportData, path: Path) -> bool:
    if not data.success_rows:
        return False
    models = sorted({r["model"] for r in data.success_rows})
    by_key = {(r["model"], r["mode"]): r["success_rate"] for r in data.success_rows}
    base = [100 * by_key.get((m, MODE_BASELINE), 0.0) for m in models]
    agent = [100 * by_key.get((m, MODE_AGENT), 0.0) for m in models]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(models) + 2), 4))
    _grouped_bars(ax, models, [base, agent], ["baseline", "agent"])
    ax.set_ylabel("compile success (%)")
    ax.set_ylim(0, 100)
    ax.set_title("Compile success by model and mode")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return True


def _iteration_histogram(data: ReportData, path: Path) -> bool:
    if not data.iteration_rows:
        return False
    models = [r["model"] for r in data.iteration_rows]
    width = data.iteration_width
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(models) + 2), 4))
    bottoms = [0] * len(models)
    for k in range(width):
        values = [r[f"iter_{k + 1}"] for r in data.iteration_rows]
        ax.bar(models, values, bottom=bottoms, label=f"iteration {k + 1}")
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_ylabel("tasks first compiling")
    ax.set_title("First compile success per iteration")
    ax.tick_params(axis="x", rotation=45, labelsize=8)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return True


def _improvement_buckets(data: ReportData, path: Path) -> bool:
    if not data.bucket_rows:
        return False
    counts = [data.bucket_summary.get(name, 0) for name in BUCKET_ORDER]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(BUCKET_ORDER, counts)
    ax.set_ylabel("tasks")
    ax.set_title("Agents vs baselines: per-task improvement")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return True


def _failure_categories(data: ReportData, path: Path) -> bool:
    rows = [(name, row) for name, row in data.category_table.items() if name != "Total"]
    if not rows:
        return False
    labels = [name for name, _ in rows]
    base = [row["count_base"] for _, row in rows]
    agent = [row["count_agent"] for _, row in rows]
    fig, ax = plt.subplots(figsize=(8, 4))
    _grouped_bars(ax, labels, [base, agent], ["baseline", "agent"])
    ax.set_ylabel("failed tasks")
    ax.set_title("Failure categories")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return True


def _mismatch_languages(data: ReportData, path: Path) -> bool:
    if not data.mismatch_rows:
        return False
    labels = [r["language"] for r in data.mismatch_rows]
    base = [r["count_base"] for r in data.mismatch_rows]
    agent = [r["count_agent"] for r in data.mismatch_rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    _grouped_bars(ax, labels, [base, agent], ["baseline", "agent"])
    ax.set_ylabel("language-mismatch failures")
    ax.set_title("Languages behind mismatch failures")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return True
