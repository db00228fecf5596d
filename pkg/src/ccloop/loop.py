"""Baseline and agent run protocols.

Baseline: one completion, one compile. Agent: up to `max_iterations`
rounds where each failed compile's stderr is fed back through a fixed
repair prompt appended to the same transcript.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Callable, Protocol

from ccloop.compiler import (
    CompileOutcome,
    CompilerConfig,
    compile_source,
    feedback_excerpt,
    parse_diagnostics,
)
from ccloop.corpus import Task
from ccloop.extraction import ExtractionResult, extract_code
from ccloop.gateway import ChatMessage, ChatTranscript, GatewayError, ModelSpec, ROLE_SYSTEM

MODE_BASELINE = "baseline"
MODE_AGENT = "agent"
DEFAULT_MAX_ITERATIONS = 5

SYSTEM_PROMPT = (
    "You are a software that writes C programs based on prompts. "
    "Provides only the code, with no description"
)

REPAIR_TEMPLATE = (
    "For this program {CODE}, I got the following compilation error: {ERROR}. "
    "Please fix the code and return the fixed code in a markdown code block."
)


class Backend(Protocol):
    def complete(self, spec: ModelSpec, transcript: ChatTranscript) -> str: ...


def render_prompts(
    task: Task, prev_code: str | None = None, prev_error: str | None = None
) -> tuple[str, str, str | None]:
    """(system prompt, first user prompt, repair prompt or None).

    The repair prompt requires both the previous code and the previous
    compiler error.
    """
    if (prev_code is None) != (prev_error is None):
        raise ValueError("repair prompt needs both prev_code and prev_error")
    repair = None
    if prev_code is not None:
        repair = REPAIR_TEMPLATE.format(CODE=prev_code, ERROR=prev_error)
    return SYSTEM_PROMPT, task.description, repair


@dataclass(frozen=True)
class IterationRecord:
    index: int
    prompt_sent: str
    raw_output: str
    extraction: ExtractionResult | None
    compile: CompileOutcome | None
    model_latency: float
    error: str | None = None


@dataclass(frozen=True)
class TaskRunLog:
    task_id: str
    model_name: str
    mode: str
    iterations: tuple[IterationRecord, ...]
    succeeded: bool
    success_iteration: int | None
    error: str | None = None


Sink = Callable[[TaskRunLog], None]


def run_baseline(
    task: Task,
    spec: ModelSpec,
    backend: Backend,
    compiler_cfg: CompilerConfig,
    sink: Sink | None = None,
) -> TaskRunLog:
    """One attempt: system prompt + task description, then compile."""
    system, first_user, _ = render_prompts(task)
    transcript = ChatTranscript([ChatMessage(ROLE_SYSTEM, system)])
    transcript.append_user(first_user)
    record = _complete_and_compile(1, first_user, spec, backend, transcript, compiler_cfg)
    log = _finish(
        task, spec, MODE_BASELINE, [record], error=record.error, sink=sink
    )
    return log


def run_agent(
    task: Task,
    spec: ModelSpec,
    backend: Backend,
    compiler_cfg: CompilerConfig,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    sink: Sink | None = None,
    transcript_cap: int | None = None,
) -> TaskRunLog:
    """Compile-repair loop: stop at first success or after max_iterations.

    Each task gets a fresh transcript; the full conversation accumulates
    across iterations. A gateway failure consumes its iteration and ends
    the run.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    system, first_user, _ = render_prompts(task)
    transcript = ChatTranscript([ChatMessage(ROLE_SYSTEM, system)])

    records: list[IterationRecord] = []
    run_error: str | None = None
    prev_code: str | None = None
    prev_error: str | None = None

    for index in range(1, max_iterations + 1):
        if index == 1:
            prompt = first_user
        else:
            _, _, prompt = render_prompts(task, prev_code, prev_error)
        transcript.append_user(prompt)
        _enforce_cap(transcript, transcript_cap)
        record = _complete_and_compile(
            index, prompt, spec, backend, transcript, compiler_cfg
        )
        records.append(record)
        if record.error is not None:
            run_error = record.error
            break
        if record.compile is not None and record.compile.success:
            break
        prev_code = record.extraction.code if record.extraction else ""
        prev_error = feedback_excerpt(
            record.compile.stderr_raw if record.compile else "",
            compiler_cfg.feedback_bytes,
        )

    return _finish(task, spec, MODE_AGENT, records, error=run_error, sink=sink)


def _complete_and_compile(
    index: int,
    prompt: str,
    spec: ModelSpec,
    backend: Backend,
    transcript: ChatTranscript,
    compiler_cfg: CompilerConfig,
) -> IterationRecord:
    start = time.perf_counter()
    try:
        raw = backend.complete(spec, transcript)
    except GatewayError as exc:
        return IterationRecord(
            index=index,
            prompt_sent=prompt,
            raw_output="",
            extraction=None,
            compile=None,
            model_latency=0.0,
            error=exc.kind,
        )
    latency = 0.0 if getattr(backend, "deterministic", False) else time.perf_counter() - start
    transcript.append_assistant(raw)
    extraction = extract_code(raw)
    outcome = compile_source(extraction.code, compiler_cfg)
    return IterationRecord(
        index=index,
        prompt_sent=prompt,
        raw_output=raw,
        extraction=extraction,
        compile=outcome,
        model_latency=latency,
    )


def _enforce_cap(transcript: ChatTranscript, cap: int | None) -> None:
    if cap is None:
        return
    # drop the oldest user/assistant pair, never the system head or the
    # freshly appended user turn
    while len(transcript.messages) > cap and len(transcript.messages) > 3:
        del transcript.messages[1:3]


def _finish(
    task: Task,
    spec: ModelSpec,
    mode: str,
    records: list[IterationRecord],
    error: str | None,
    sink: Sink | None,
) -> TaskRunLog:
    success_iteration = None
    for record in records:
        if record.compile is not None and record.compile.success:
            success_iteration = record.index
            break
    log = TaskRunLog(
        task_id=task.id,
        model_name=spec.name,
        mode=mode,
        iterations=tuple(records),
        succeeded=success_iteration is not None,
        success_iteration=success_iteration,
        error=error,
    )
    if sink is not None:
        sink(log)
    return log


def log_to_json(log: TaskRunLog) -> dict:
    """Run-log wire form (one JSONL line per task run)."""
    iterations = []
    for it in log.iterations:
        entry: dict = {
            "index": it.index,
            "prompt_sent": it.prompt_sent,
            "raw_output": it.raw_output,
            "code": it.extraction.code if it.extraction else "",
            "had_fences": it.extraction.had_fences if it.extraction else False,
            "fence_info": it.extraction.fence_info if it.extraction else None,
            "compile": None
            if it.compile is None
            else {
                "success": it.compile.success,
                "exit_code": it.compile.exit_code,
                "stderr_raw": it.compile.stderr_raw,
                "timed_out": it.compile.timed_out,
            },
            "model_latency_ms": int(round(it.model_latency * 1000)),
        }
        if it.error is not None:
            entry["error"] = it.error
        iterations.append(entry)
    record: dict = {
        "task_id": log.task_id,
        "model_name": log.model_name,
        "mode": log.mode,
        "succeeded": log.succeeded,
        "success_iteration": log.success_iteration,
        "iterations": iterations,
    }
    if log.error is not None:
        record["error"] = log.error
    return record


def log_to_json_line(log: TaskRunLog) -> str:
    return json.dumps(log_to_json(log), ensure_ascii=False)


def log_from_json(record: dict) -> TaskRunLog:
    """Rebuild a run log from its wire form.

    Extraction details are recovered by re-running the (pure) extraction
    on the persisted raw output, so logs stay self-contained.
    """
    iterations = []
    for entry in record["iterations"]:
        compile_entry = entry.get("compile")
        outcome = None
        if compile_entry is not None:
            outcome = CompileOutcome(
                success=compile_entry["success"],
                exit_code=compile_entry["exit_code"],
                diagnostics=tuple(parse_diagnostics(compile_entry["stderr_raw"])),
                stderr_raw=compile_entry["stderr_raw"],
                duration=0.0,
                timed_out=compile_entry["timed_out"],
            )
        extraction = None
        if entry.get("error") is None:
            extraction = extract_code(entry["raw_output"])
        iterations.append(
            IterationRecord(
                index=entry["index"],
                prompt_sent=entry["prompt_sent"],
                raw_output=entry["raw_output"],
                extraction=extraction,
                compile=outcome,
                model_latency=entry.get("model_latency_ms", 0) / 1000.0,
                error=entry.get("error"),
            )
        )
    return TaskRunLog(
        task_id=record["task_id"],
        model_name=record["model_name"],
        mode=record["mode"],
        iterations=tuple(iterations),
        succeeded=record["succeeded"],
        success_iteration=record["success_iteration"],
        error=record.get("error"),
    )
