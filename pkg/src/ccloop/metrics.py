"""Quantitative measures: compile success rate, BLEU, ROUGE-1, line-diff
size, per-iteration success counts, and Pearson correlation.

BLEU and ROUGE-1 operate on token sequences; `tokenize_code` provides the
canonical code tokenization (identifier/number runs, every other
non-whitespace character its own token).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from ccloop.loop import TaskRunLog

BLEU_MAX_N = 4
BLEU_EPSILON = 1e-9

_TOKEN = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")


class EmptyReferenceError(ValueError):
    """Similarity metrics require a non-empty reference."""


class LengthMismatchError(ValueError):
    """Paired sequences must have equal length."""


class ZeroVarianceError(ValueError):
    """Pearson correlation is undefined for a constant sequence."""


class ModeMixError(ValueError):
    """Log collection mixes run modes that must not be mixed."""


@dataclass(frozen=True)
class SimilarityScore:
    bleu: float
    rouge1_recall: float
    rouge1_precision: float
    rouge1_f1: float


@dataclass(frozen=True)
class Rouge1:
    recall: float
    precision: float
    f1: float


@dataclass(frozen=True)
class IterationHistogram:
    """counts[k-1] = number of tasks first compiling at iteration k."""

    counts: tuple[int, ...]


def tokenize_code(text: str) -> list[str]:
    return _TOKEN.findall(text)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """BLEU over n-grams 1..4 with uniform weights and brevity penalty.

    Zero n-gram match counts are smoothed to 1e-9. The n-gram order is
    capped at the candidate length so that bleu(x, x) is exactly 1.0 for
    any non-empty x. An empty candidate scores 0.
    """
    if not reference:
        raise EmptyReferenceError("BLEU reference must be non-empty")
    if not candidate:
        return 0.0

    max_n = min(BLEU_MAX_N, len(candidate))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_ngrams = _ngrams(candidate, n)
        ref_ngrams = _ngrams(reference, n)
        total = sum(cand_ngrams.values())
        matched = sum(min(c, ref_ngrams[g]) for g, c in cand_ngrams.items())
        numerator = matched if matched > 0 else BLEU_EPSILON
        log_sum += math.log(numerator / total)

    c, r = len(candidate), len(reference)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum / max_n)


def rouge1(candidate: Sequence[str], reference: Sequence[str]) -> Rouge1:
    """Clipped unigram overlap: recall against the reference, precision
    against the candidate, and their harmonic mean."""
    if not reference:
        raise EmptyReferenceError("ROUGE reference must be non-empty")
    overlap = sum((Counter(candidate) & Counter(reference)).values())
    recall = overlap / len(reference)
    precision = overlap / len(candidate) if candidate else 0.0
    f1 = 0.0
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return Rouge1(recall=recall, precision=precision, f1=f1)


def similarity(candidate_text: str, reference_text: str) -> SimilarityScore:
    cand = tokenize_code(candidate_text)
    ref = tokenize_code(reference_text)
    r = rouge1(cand, ref)
    return SimilarityScore(
        bleu=bleu(cand, ref),
        rouge1_recall=r.recall,
        rouge1_precision=r.precision,
        rouge1_f1=r.f1,
    )


def rows_changed(code_prev: str, code_next: str) -> int:
    """Insertions plus deletions of a minimal line-level edit script.

    Lines are compared exactly after stripping trailing whitespace. Uses a
    true LCS so the count matches what a standard diff tool reports
    (difflib's block matcher is not guaranteed minimal).
    """
    a = [line.rstrip() for line in code_prev.splitlines()]
    b = [line.rstrip() for line in code_next.splitlines()]
    return len(a) + len(b) - 2 * _lcs_length(a, b)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    if len(b) > len(a):  # keep the DP row short
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise LengthMismatchError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise ValueError("pearson requires at least 2 points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    vx = math.fsum(d * d for d in dx)
    vy = math.fsum(d * d for d in dy)
    if vx == 0.0 or vy == 0.0:
        raise ZeroVarianceError("pearson undefined for zero-variance input")
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    return cov / math.sqrt(vx * vy)


def success_rate(logs: Iterable["TaskRunLog"]) -> float:
    """Fraction of runs that compiled; all logs must share (model, mode)."""
    logs = list(logs)
    if not logs:
        raise ValueError("success_rate of an empty log collection")
    keys = {(log.model_name, log.mode) for log in logs}
    if len(keys) > 1:
        raise ModeMixError(f"logs span multiple (model, mode) pairs: {sorted(keys)}")
    return sum(1 for log in logs if log.succeeded) / len(logs)


def iteration_histogram(logs: Iterable["TaskRunLog"]) -> IterationHistogram:
    """Per-iteration counts of first compile success over agent logs."""
    logs = list(logs)
    if any(log.mode != "agent" for log in logs):
        raise ModeMixError("iteration_histogram requires agent-mode logs only")
    width = 5
    for log in logs:
        width = max(width, len(log.iterations))
    counts = [0] * width
    for log in logs:
        if log.success_iteration is not None:
            counts[log.success_iteration - 1] += 1
    return IterationHistogram(counts=tuple(counts))


def transition_stats(logs: Iterable["TaskRunLog"]) -> list[dict[str, float]]:
    """Similarity between consecutive iterations' extracted code.

    For each transition k -> k+1, averages BLEU, ROUGE-1 recall, and rows
    changed over the logs where both iterations produced code.
    """
    logs = list(logs)
    width = max((len(log.iterations) for log in logs), default=0)
    rows: list[dict[str, float]] = []
    for k in range(1, width):
        bleus: list[float] = []
        rouges: list[float] = []
        changes: list[float] = []
        for log in logs:
            if len(log.iterations) <= k:
                continue
            prev_it, next_it = log.iterations[k - 1], log.iterations[k]
            if prev_it.extraction is None or next_it.extraction is None:
                continue
            prev_code, next_code = prev_it.extraction.code, next_it.extraction.code
            prev_tokens = tokenize_code(prev_code)
            next_tokens = tokenize_code(next_code)
            if not prev_tokens:
                continue  # no reference to compare against
            bleus.append(bleu(next_tokens, prev_tokens))
            rouges.append(rouge1(next_tokens, prev_tokens).recall)
            changes.append(rows_changed(prev_code, next_code))
        if bleus:
            rows.append(
                {
                    "transition": f"{k}-{k + 1}",
                    "pairs": len(bleus),
                    "bleu": math.fsum(bleus) / len(bleus),
                    "rouge1_recall": math.fsum(rouges) / len(rouges),
                    "rows_changed": math.fsum(changes) / len(changes),
                }
            )
        else:
            rows.append(
                {
                    "transition": f"{k}-{k + 1}",
                    "pairs": 0,
                    "bleu": None,
                    "rouge1_recall": None,
                    "rows_changed": None,
                }
            )
    return rows
