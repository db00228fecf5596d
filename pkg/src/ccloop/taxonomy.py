"""Six-way failure categories for non-compiling final outputs, plus the
per-task improvement bucketing and category-reduction statistics.

Classification cascade: output-level checks first (is there code at all,
is it C, is unfenced code mixed with prose), then a vote over parsed
compiler diagnostics.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from ccloop.extraction import detect_language
from ccloop.loop import IterationRecord, TaskRunLog

TAXONOMY_VERSION = "1"


class ErrorCategory(enum.Enum):
    LANGUAGE_MISMATCH = "LanguageMismatch"
    MISSING_CODE = "MissingCode"
    MARKDOWN_ERROR = "MarkdownError"
    SYNTAX_ERROR = "SyntaxError"
    UNDEFINED_REFERENCE = "UndefinedReference"
    LINKING_ERROR = "LinkingError"


CATEGORY_ORDER = (
    ErrorCategory.LANGUAGE_MISMATCH,
    ErrorCategory.MISSING_CODE,
    ErrorCategory.MARKDOWN_ERROR,
    ErrorCategory.SYNTAX_ERROR,
    ErrorCategory.UNDEFINED_REFERENCE,
    ErrorCategory.LINKING_ERROR,
)


class TaxonomyVersionError(RuntimeError):
    """Inputs were classified with different cascade versions."""


class MismatchedModelSetError(ValueError):
    """Agent and baseline log sets cover different models."""


@dataclass(frozen=True)
class FailureVotes:
    syntax: int = 0
    undefined: int = 0
    linking: int = 0


@dataclass(frozen=True)
class BucketThresholds:
    """delta < slight_min: none; < significant_min: slight; else significant."""

    slight_min: int = 1
    significant_min: int = 4

    def __post_init__(self) -> None:
        if self.significant_min <= self.slight_min:
            raise ValueError("significant_min must exceed slight_min")


NO_IMPROVEMENT = "NoImprovement"
SLIGHT_IMPROVEMENT = "SlightImprovement"
SIGNIFICANT_IMPROVEMENT = "SignificantImprovement"


@dataclass(frozen=True)
class ImprovementBucket:
    value: str
    delta: int


# "three consecutive natural-language words and no statement terminator
# or brace" marks a prose line; comment and preprocessor lines never do
_PROSE_RUN = re.compile(r"[A-Za-z]+ [A-Za-z]+ [A-Za-z]+")
_ALNUM = re.compile(r"[A-Za-z0-9]")


def _is_comment_line(stripped: str) -> bool:
    return stripped.startswith(("//", "/*", "*"))


def is_prose_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped or _is_comment_line(stripped) or stripped.startswith("#"):
        return False
    if any(ch in stripped for ch in ";{}"):
        return False
    return bool(_PROSE_RUN.search(stripped))


def _is_code_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped or _is_comment_line(stripped):
        return False
    return not is_prose_line(line)


def classify_failure(final: IterationRecord) -> ErrorCategory:
    return classify_failure_with_votes(final)[0]


def classify_failure_with_votes(
    final: IterationRecord,
) -> tuple[ErrorCategory, FailureVotes]:
    """Assign exactly one category to a failed final iteration.

    Order: no real code at all -> MissingCode; non-C code ->
    LanguageMismatch; unfenced prose mixed with code -> MarkdownError;
    otherwise the plurality vote of the parsed diagnostics decides, ties
    broken SyntaxError > UndefinedReference > LinkingError.
    """
    if final.compile is not None and final.compile.success:
        raise ValueError("classify_failure requires a failed iteration")

    votes = FailureVotes()
    if final.extraction is None:
        return ErrorCategory.MISSING_CODE, votes

    code = final.extraction.code
    lines = code.split("\n")
    if not _ALNUM.search(code) or not any(_is_code_line(l) for l in lines):
        return ErrorCategory.MISSING_CODE, votes

    if detect_language(final.extraction).language != "c":
        return ErrorCategory.LANGUAGE_MISMATCH, votes

    if not final.extraction.had_fences and any(is_prose_line(l) for l in lines):
        return ErrorCategory.MARKDOWN_ERROR, votes

    syntax = undefined = linking = 0
    diagnostics = final.compile.diagnostics if final.compile else ()
    for diag in diagnostics:
        if diag.severity == "fatal" and "No such file or directory" in diag.message:
            linking += 1
        elif diag.severity == "linker":
            undefined += 1
        elif diag.severity in ("error", "fatal"):
            syntax += 1
    votes = FailureVotes(syntax=syntax, undefined=undefined, linking=linking)

    ranked = (
        (ErrorCategory.SYNTAX_ERROR, syntax),
        (ErrorCategory.UNDEFINED_REFERENCE, undefined),
        (ErrorCategory.LINKING_ERROR, linking),
    )
    best = max(count for _, count in ranked)
    for category, count in ranked:
        if count == best:
            return category, votes
    raise AssertionError("unreachable")


def bucket_improvement(
    task_id: str,
    agent_logs: Iterable[TaskRunLog],
    baseline_logs: Iterable[TaskRunLog],
    thresholds: BucketThresholds = BucketThresholds(),
) -> ImprovementBucket:
    """Bucket a task by how many more agents than baselines solved it."""
    agent_logs = [log for log in agent_logs if log.task_id == task_id]
    baseline_logs = [log for log in baseline_logs if log.task_id == task_id]
    agent_models = {log.model_name for log in agent_logs}
    baseline_models = {log.model_name for log in baseline_logs}
    if agent_models != baseline_models:
        raise MismatchedModelSetError(
            f"model sets differ for task {task_id!r}: "
            f"{sorted(agent_models)} vs {sorted(baseline_models)}"
        )
    delta = sum(log.succeeded for log in agent_logs) - sum(
        log.succeeded for log in baseline_logs
    )
    if delta < thresholds.slight_min:
        value = NO_IMPROVEMENT
    elif delta < thresholds.significant_min:
        value = SLIGHT_IMPROVEMENT
    else:
        value = SIGNIFICANT_IMPROVEMENT
    return ImprovementBucket(value=value, delta=delta)


def _as_counts(
    failures: Iterable[ErrorCategory] | Mapping[ErrorCategory | str, int],
) -> Counter:
    counts: Counter = Counter()
    if isinstance(failures, Mapping):
        for key, value in failures.items():
            category = key if isinstance(key, ErrorCategory) else ErrorCategory(key)
            counts[category] += int(value)
    else:
        for category in failures:
            counts[category] += 1
    return counts


def category_reduction(
    baseline_failures: Iterable[ErrorCategory] | Mapping[ErrorCategory | str, int],
    agent_failures: Iterable[ErrorCategory] | Mapping[ErrorCategory | str, int],
    baseline_version: str = TAXONOMY_VERSION,
    agent_version: str = TAXONOMY_VERSION,
) -> dict[str, dict]:
    """Per-category counts and reduction fractions, plus a Total row.

    reduction_fraction = 1 - count_agent / count_base, None when
    count_base is 0.
    """
    if baseline_version != agent_version:
        raise TaxonomyVersionError(
            f"taxonomy versions differ: {baseline_version!r} vs {agent_version!r}"
        )
    base = _as_counts(baseline_failures)
    agent = _as_counts(agent_failures)
    table: dict[str, dict] = {}
    for category in CATEGORY_ORDER:
        table[category.value] = _reduction_row(base[category], agent[category])
    table["Total"] = _reduction_row(sum(base.values()), sum(agent.values()))
    return table


def _reduction_row(count_base: int, count_agent: int) -> dict:
    reduction = None if count_base == 0 else 1.0 - count_agent / count_base
    return {
        "count_base": count_base,
        "count_agent": count_agent,
        "reduction_fraction": reduction,
    }
