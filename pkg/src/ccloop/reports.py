"""Build every report table from persisted run logs.

Reports are pure functions of the log files, the corpus, and the
configuration; regenerating them is byte-identical. Machine output is
CSV, the human summary is markdown, and the companion figures are
rendered by ccloop.figures.
"""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from ccloop import metrics
from ccloop.config import RunConfig
from ccloop.corpus import TaskCorpus
from ccloop.loop import MODE_AGENT, MODE_BASELINE, TaskRunLog
from ccloop.metrics import LengthMismatchError, ZeroVarianceError
from ccloop.extraction import detect_language
from ccloop.taxonomy import (
    NO_IMPROVEMENT,
    SIGNIFICANT_IMPROVEMENT,
    SLIGHT_IMPROVEMENT,
    TAXONOMY_VERSION,
    TaxonomyVersionError,
    bucket_improvement,
    category_reduction,
    classify_failure_with_votes,
)

BUCKET_ORDER = (NO_IMPROVEMENT, SLIGHT_IMPROVEMENT, SIGNIFICANT_IMPROVEMENT)

CLASSIFIED_CSV = "classified_failures.csv"
CLASSIFIED_META = "classified_failures.meta.json"


@dataclass
class ReportData:
    """Everything the CSV/markdown/figure writers consume."""

    success_rows: list[dict] = field(default_factory=list)
    iteration_rows: list[dict] = field(default_factory=list)
    iteration_width: int = 5
    transition_rows: list[dict] = field(default_factory=list)
    bucket_rows: list[dict] = field(default_factory=list)
    bucket_summary: dict[str, int] = field(default_factory=dict)
    category_table: dict[str, dict] = field(default_factory=dict)
    mismatch_rows: list[dict] = field(default_factory=list)
    correlation_rows: list[dict] = field(default_factory=list)
    classified_rows: list[dict] = field(default_factory=list)


def group_logs(logs: list[TaskRunLog]) -> dict[tuple[str, str], list[TaskRunLog]]:
    groups: dict[tuple[str, str], list[TaskRunLog]] = defaultdict(list)
    for log in logs:
        groups[(log.model_name, log.mode)].append(log)
    return dict(groups)


def compute_report_data(
    logs: list[TaskRunLog], corpus: TaskCorpus, config: RunConfig
) -> ReportData:
    data = ReportData()
    groups = group_logs(logs)
    tasks_by_id = {t.id: t for t in corpus}

    _success_table(data, groups, tasks_by_id)
    _iteration_table(data, groups)
    _transition_table(data, groups)
    _buckets(data, groups, config)
    _failure_tables(data, groups)
    _correlations(data, groups, tasks_by_id, config)
    return data


def _final_code(log: TaskRunLog) -> str:
    if not log.iterations:
        return ""
    last = log.iterations[-1]
    return last.extraction.code if last.extraction else ""


def _success_table(data, groups, tasks_by_id) -> None:
    for (model, mode) in sorted(groups):
        logs = groups[(model, mode)]
        scores = []
        for log in logs:
            task = tasks_by_id.get(log.task_id)
            if task is None:
                continue
            scores.append(metrics.similarity(_final_code(log), task.ground_truth))
        n = len(scores)
        data.success_rows.append(
            {
                "model": model,
                "mode": mode,
                "tasks": len(logs),
                "succeeded": sum(1 for log in logs if log.succeeded),
                "success_rate": metrics.success_rate(logs),
                "bleu": sum(s.bleu for s in scores) / n if n else None,
                "rouge1_recall": sum(s.rouge1_recall for s in scores) / n if n else None,
                "rouge1_precision": sum(s.rouge1_precision for s in scores) / n
                if n
                else None,
                "rouge1_f1": sum(s.rouge1_f1 for s in scores) / n if n else None,
                # reserved: semantic-similarity scoring needs an embedding model
                "codebert_precision": None,
                "codebert_recall": None,
            }
        )


def _iteration_table(data, groups) -> None:
    width = 5
    histograms = {}
    for (model, mode) in sorted(groups):
        if mode != MODE_AGENT:
            continue
        hist = metrics.iteration_histogram(groups[(model, mode)])
        histograms[model] = (hist, len(groups[(model, mode)]))
        width = max(width, len(hist.counts))
    data.iteration_width = width
    for model, (hist, total) in histograms.items():
        row = {"model": model, "tasks": total, "succeeded": sum(hist.counts)}
        for k in range(width):
            row[f"iter_{k + 1}"] = hist.counts[k] if k < len(hist.counts) else 0
        data.iteration_rows.append(row)


def _transition_table(data, groups) -> None:
    for (model, mode) in sorted(groups):
        if mode != MODE_AGENT:
            continue
        for row in metrics.transition_stats(groups[(model, mode)]):
            data.transition_rows.append({"model": model, **row})


def _buckets(data, groups, config) -> None:
    agent_by_task: dict[str, dict[str, TaskRunLog]] = defaultdict(dict)
    base_by_task: dict[str, dict[str, TaskRunLog]] = defaultdict(dict)
    for (model, mode), logs in groups.items():
        for log in logs:
            if mode == MODE_AGENT:
                agent_by_task[log.task_id][model] = log
            else:
                base_by_task[log.task_id][model] = log

    summary = Counter()
    for task_id in sorted(set(agent_by_task) | set(base_by_task)):
        models = set(agent_by_task.get(task_id, {})) & set(base_by_task.get(task_id, {}))
        if not models:
            continue
        bucket = bucket_improvement(
            task_id,
            [agent_by_task[task_id][m] for m in models],
            [base_by_task[task_id][m] for m in models],
            config.thresholds,
        )
        data.bucket_rows.append(
            {"task_id": task_id, "delta": bucket.delta, "bucket": bucket.value}
        )
        summary[bucket.value] += 1
    data.bucket_summary = {name: summary.get(name, 0) for name in BUCKET_ORDER}


def _failure_tables(data, groups) -> None:
    counts = {MODE_BASELINE: Counter(), MODE_AGENT: Counter()}
    languages = {MODE_BASELINE: Counter(), MODE_AGENT: Counter()}
    for (model, mode) in sorted(groups):
        for log in groups[(model, mode)]:
            if log.succeeded or not log.iterations:
                continue
            final = log.iterations[-1]
            category, votes = classify_failure_with_votes(final)
            counts[mode][category] += 1
            data.classified_rows.append(
                {
                    "task_id": log.task_id,
                    "model": model,
                    "mode": mode,
                    "category": category.value,
                    "votes_syntax": votes.syntax,
                    "votes_undef": votes.undefined,
                    "votes_link": votes.linking,
                }
            )
            if category.value == "LanguageMismatch" and final.extraction is not None:
                languages[mode][detect_language(final.extraction).language] += 1

    modes_present = {mode for _, mode in groups}
    if counts[MODE_BASELINE] or counts[MODE_AGENT]:
        data.category_table = category_reduction(
            counts[MODE_BASELINE], counts[MODE_AGENT]
        )
        if modes_present != {MODE_BASELINE, MODE_AGENT}:
            # a reduction against a mode that never ran would mislead
            for row in data.category_table.values():
                row["reduction_fraction"] = None
    for language in sorted(set(languages[MODE_BASELINE]) | set(languages[MODE_AGENT])):
        data.mismatch_rows.append(
            {
                "language": language,
                "count_base": languages[MODE_BASELINE][language],
                "count_agent": languages[MODE_AGENT][language],
            }
        )


def _correlations(data, groups, tasks_by_id, config) -> None:
    def add(name: str, xs: list[float], ys: list[float]) -> None:
        row = {"name": name, "n": len(xs), "pearson_r": None, "note": ""}
        try:
            row["pearson_r"] = metrics.pearson(xs, ys)
        except (LengthMismatchError, ZeroVarianceError, ValueError) as exc:
            row["note"] = str(exc)
        data.correlation_rows.append(row)

    sizes, rates = [], []
    for row in data.success_rows:
        if row["mode"] != MODE_BASELINE:
            continue
        try:
            size = config.model(row["model"]).spec.parameter_count
        except Exception:
            size = 0
        if size > 0:
            sizes.append(float(size))
            rates.append(row["success_rate"])
    if sizes:
        add("model_size_vs_baseline_success", sizes, rates)

    deltas = {r["task_id"]: r["delta"] for r in data.bucket_rows}
    sol_x, sol_y, desc_x, desc_y = [], [], [], []
    for task_id, delta in sorted(deltas.items()):
        task = tasks_by_id.get(task_id)
        if task is None:
            continue
        sol_x.append(float(task.solution_tokens))
        sol_y.append(float(delta))
        desc_x.append(float(task.description_tokens))
        desc_y.append(float(delta))
    if sol_x:
        add("solution_tokens_vs_delta", sol_x, sol_y)
        add("description_tokens_vs_delta", desc_x, desc_y)


def _fmt(value, places: int = 6) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{places}f}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_reports(data: ReportData, report_dir: Path) -> list[Path]:
    """Emit every CSV table plus the markdown summary. Returns the paths."""
    report_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, header: list[str], rows: list[list]) -> None:
        path = report_dir / name
        _write_csv(path, header, rows)
        written.append(path)

    emit(
        "success_table.csv",
        [
            "model", "mode", "tasks", "succeeded", "success_rate",
            "bleu", "rouge1_recall", "rouge1_precision", "rouge1_f1",
            "codebert_precision", "codebert_recall",
        ],
        [
            [
                r["model"], r["mode"], r["tasks"], r["succeeded"],
                _fmt(r["success_rate"]), _fmt(r["bleu"]), _fmt(r["rouge1_recall"]),
                _fmt(r["rouge1_precision"]), _fmt(r["rouge1_f1"]),
                _fmt(r["codebert_precision"]), _fmt(r["codebert_recall"]),
            ]
            for r in data.success_rows
        ],
    )

    iter_cols = [f"iter_{k + 1}" for k in range(data.iteration_width)]
    emit(
        "iteration_table.csv",
        ["model", "tasks", "succeeded", *iter_cols],
        [
            [r["model"], r["tasks"], r["succeeded"], *[r[c] for c in iter_cols]]
            for r in data.iteration_rows
        ],
    )

    emit(
        "transition_table.csv",
        ["model", "transition", "pairs", "bleu", "rouge1_recall", "rows_changed"],
        [
            [
                r["model"], r["transition"], r["pairs"],
                _fmt(r["bleu"]), _fmt(r["rouge1_recall"]), _fmt(r["rows_changed"], 3),
            ]
            for r in data.transition_rows
        ],
    )

    emit(
        "buckets.csv",
        ["task_id", "delta", "bucket"],
        [[r["task_id"], r["delta"], r["bucket"]] for r in data.bucket_rows],
    )
    emit(
        "bucket_summary.csv",
        ["bucket", "tasks"],
        [[name, count] for name, count in data.bucket_summary.items()],
    )

    emit(
        "category_counts.csv",
        ["category", "count_base", "count_agent", "reduction_fraction"],
        [
            [
                name,
                row["count_base"],
                row["count_agent"],
                _fmt(row["reduction_fraction"], 3),
            ]
            for name, row in data.category_table.items()
        ],
    )

    emit(
        "mismatch_languages.csv",
        ["language", "count_base", "count_agent"],
        [
            [r["language"], r["count_base"], r["count_agent"]]
            for r in data.mismatch_rows
        ],
    )

    emit(
        "correlations.csv",
        ["name", "n", "pearson_r", "note"],
        [
            [r["name"], r["n"], _fmt(r["pearson_r"]), r["note"]]
            for r in data.correlation_rows
        ],
    )

    summary = report_dir / "summary.md"
    summary.write_text(render_summary(data), encoding="utf-8")
    written.append(summary)
    return written


def render_summary(data: ReportData) -> str:
    lines = ["# Run summary", ""]

    lines += ["## Compile success and similarity to ground truth", ""]
    lines.append("R1 shown is ROUGE-1 recall; precision and F1 are in the CSV.")
    lines.append("")
    lines.append("| Model | Mode | Tasks | Success | BLEU | R1 (recall) |")
    lines.append("|---|---|---|---|---|---|")
    for r in data.success_rows:
        lines.append(
            "| {model} | {mode} | {tasks} | {rate:.1f}% | {bleu} | {r1} |".format(
                model=r["model"],
                mode=r["mode"],
                tasks=r["tasks"],
                rate=100 * r["success_rate"],
                bleu=_fmt(r["bleu"], 3) or "-",
                r1=_fmt(r["rouge1_recall"], 3) or "-",
            )
        )
    lines.append("")

    if data.iteration_rows:
        iter_cols = [f"iter_{k + 1}" for k in range(data.iteration_width)]
        lines += ["## First compile success per iteration (agent mode)", ""]
        lines.append("| Model | " + " | ".join(str(k + 1) for k in range(data.iteration_width)) + " |")
        lines.append("|---|" + "---|" * data.iteration_width)
        for r in data.iteration_rows:
            lines.append(
                "| " + r["model"] + " | " + " | ".join(str(r[c]) for c in iter_cols) + " |"
            )
        lines.append("")

    if data.bucket_rows:
        lines += ["## Improvement buckets (agents vs baselines per task)", ""]
        for name in BUCKET_ORDER:
            lines.append(f"- {name}: {data.bucket_summary.get(name, 0)}")
        lines.append("")

    if data.category_table:
        lines += ["## Failure categories", ""]
        lines.append("| Category | Baseline | Agent | Reduction |")
        lines.append("|---|---|---|---|")
        for name, row in data.category_table.items():
            lines.append(
                "| {name} | {base} | {agent} | {red} |".format(
                    name=name,
                    base=row["count_base"],
                    agent=row["count_agent"],
                    red=_fmt(row["reduction_fraction"], 3) or "-",
                )
            )
        lines.append("")

    if data.correlation_rows:
        lines += ["## Correlations", ""]
        for r in data.correlation_rows:
            value = _fmt(r["pearson_r"], 3)
            lines.append(
                f"- {r['name']}: r = {value if value else 'n/a'} (n = {r['n']})"
                + (f" [{r['note']}]" if r["note"] else "")
            )
        lines.append("")

    return "\n".join(lines) + "\n"


def write_classified(data: ReportData, out_dir: Path) -> list[Path]:
    """Classified-failure CSV plus a metadata sidecar pinning the
    taxonomy version."""
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / CLASSIFIED_CSV
    _write_csv(
        csv_path,
        ["task_id", "model", "mode", "category", "votes_syntax", "votes_undef", "votes_link"],
        [
            [
                r["task_id"], r["model"], r["mode"], r["category"],
                r["votes_syntax"], r["votes_undef"], r["votes_link"],
            ]
            for r in data.classified_rows
        ],
    )
    meta_path = out_dir / CLASSIFIED_META
    meta_path.write_text(
        json.dumps({"taxonomy_version": TAXONOMY_VERSION}) + "\n", encoding="utf-8"
    )
    return [csv_path, meta_path]


def check_taxonomy_version(out_dir: Path) -> None:
    """Reject reports over classifications from a different cascade."""
    meta_path = out_dir / CLASSIFIED_META
    if not meta_path.exists():
        return
    recorded = json.loads(meta_path.read_text(encoding="utf-8")).get("taxonomy_version")
    if recorded != TAXONOMY_VERSION:
        raise TaxonomyVersionError(
            f"existing classification used taxonomy {recorded!r}, current is "
            f"{TAXONOMY_VERSION!r}; re-run classify"
        )
