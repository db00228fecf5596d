"""Drive full runs: every (model, mode) pair over the corpus, with
resumable append-only JSONL logs.

Tasks run in a bounded worker pool; results are appended by a single
writer in corpus order, so scripted runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable

from ccloop.compiler import resolve_compiler
from ccloop.config import ModelConfig, RunConfig
from ccloop.corpus import load_corpus
from ccloop.gateway import HttpBackend, ScriptedBackend
from ccloop.loop import (
    MODE_AGENT,
    TaskRunLog,
    log_from_json,
    log_to_json_line,
    run_agent,
    run_baseline,
)

# consecutive transport/timeout failures before a model's run is abandoned
ABORT_STREAK = 3


def log_path(out_dir: Path, model_name: str, mode: str) -> Path:
    return out_dir / f"{model_name}__{mode}.jsonl"


def read_logs(path: Path) -> list[TaskRunLog]:
    logs = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                logs.append(log_from_json(json.loads(line)))
    return logs


def recover_log_file(path: Path) -> set[str]:
    """Task ids already present; truncates a trailing partial line left by
    a killed run so appends stay valid JSONL."""
    if not path.exists():
        return set()
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        cut = data.rfind(b"\n") + 1
        with path.open("r+b") as fh:
            fh.truncate(cut)
        data = data[:cut]
    ids = set()
    for line in data.decode("utf-8").splitlines():
        if line.strip():
            ids.add(json.loads(line)["task_id"])
    return ids


def run_all(
    config: RunConfig,
    resume: bool = True,
    progress: Callable[[str], None] | None = None,
) -> list[Path]:
    """Execute every configured (model, mode) pair. Returns the log paths."""
    say = progress or (lambda _msg: None)
    resolve_compiler(config.compiler)  # fail before any model work
    corpus = load_corpus(config.corpus_path)
    config.out_dir.mkdir(parents=True, exist_ok=True)

    paths = []
    for model in config.models:
        for mode in config.modes:
            path = log_path(config.out_dir, model.spec.name, mode)
            paths.append(path)
            if not resume and path.exists():
                path.unlink()
            done = recover_log_file(path) if resume else set()
            todo = [task for task in corpus if task.id not in done]
            say(f"{model.spec.name} [{mode}]: {len(todo)} tasks ({len(done)} already logged)")
            if todo:
                _run_pair(config, model, mode, todo, path, say)
    return paths


def _run_pair(config, model: ModelConfig, mode: str, tasks, path: Path, say) -> None:
    shared_backend = None
    if model.backend == "http":
        shared_backend = HttpBackend(
            api_key=model.api_key(),
            extra_headers=model.headers,
            audit_path=path.with_suffix(".audit.jsonl"),
            max_in_flight=model.max_in_flight,
        )

    def run_one(task) -> TaskRunLog:
        backend = shared_backend or ScriptedBackend(model.script)
        if mode == MODE_AGENT:
            return run_agent(
                task,
                model.spec,
                backend,
                config.compiler,
                max_iterations=config.max_iterations,
                transcript_cap=config.transcript_cap,
            )
        return run_baseline(task, model.spec, backend, config.compiler)

    streak = 0
    with path.open("a", encoding="utf-8") as fh, ThreadPoolExecutor(
        max_workers=max(1, config.jobs)
    ) as pool:
        futures = [pool.submit(run_one, task) for task in tasks]
        for task, future in zip(tasks, futures):
            log = future.result()
            fh.write(log_to_json_line(log) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
            say(f"  {task.id}: {'ok' if log.succeeded else 'fail'}"
                + (f" ({log.error})" if log.error else ""))
            if log.error in ("transport", "timeout"):
                streak += 1
                if streak >= ABORT_STREAK:
                    for pending in futures:
                        pending.cancel()
                    say(
                        f"  aborting {model.spec.name} [{mode}]: "
                        f"{ABORT_STREAK} consecutive {log.error} failures"
                    )
                    return
            else:
                streak = 0
