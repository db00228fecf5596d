"""Load, validate, and filter the task corpus.

The canonical corpus is a JSON Lines file with fields
{"id", "name", "description", "category", "ground_truth"}. A
RosettaCode-style directory tree (one folder per task, C solutions in a
C/ subfolder or alongside) can be ingested as a one-time conversion.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import yaml

from ccloop.compiler import CompilerConfig, compile_source, resolve_compiler

CANONICAL_FIELDS = ("id", "name", "description", "category", "ground_truth")
DEFAULT_CATEGORY = "Other"

_DESCRIPTION_FILES = ("00-TASK.txt", "description.txt", "README.md")
_META_FILES = ("00-META.yaml", "meta.yaml", "meta.json")


class CorpusLoadError(RuntimeError):
    """Corpus source is unreadable or structurally unusable."""


class DuplicateTaskIdError(CorpusLoadError):
    """Two records share the same task id."""


def token_count(text: str) -> int:
    """Whitespace-delimited token count (split on Unicode whitespace)."""
    return len(text.split())


@dataclass(frozen=True)
class Task:
    id: str
    name: str
    description: str
    category: str
    ground_truth: str
    description_tokens: int
    solution_tokens: int

    @classmethod
    def create(
        cls, id: str, name: str, description: str, category: str, ground_truth: str
    ) -> "Task":
        if not id:
            raise ValueError("task id must be non-empty")
        if not ground_truth:
            raise ValueError(f"task {id!r} has an empty ground-truth solution")
        return cls(
            id=id,
            name=name,
            description=description,
            category=category,
            ground_truth=ground_truth,
            description_tokens=token_count(description),
            solution_tokens=token_count(ground_truth),
        )


@dataclass(frozen=True)
class TaskCorpus:
    tasks: tuple[Task, ...]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[Task]:
        return iter(self.tasks)

    def ids(self) -> set[str]:
        return {t.id for t in self.tasks}

    def canonical_jsonl(self) -> str:
        """Deterministic serialization: one task per line, fixed key order."""
        lines = []
        for t in self.tasks:
            record = {
                "id": t.id,
                "name": t.name,
                "description": t.description,
                "category": t.category,
                "ground_truth": t.ground_truth,
            }
            lines.append(json.dumps(record, ensure_ascii=False))
        return "".join(line + "\n" for line in lines)

    def write_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(self.canonical_jsonl(), encoding="utf-8")


def _sorted_by_id(tasks: Iterable[Task]) -> tuple[Task, ...]:
    return tuple(sorted(tasks, key=lambda t: t.id))


def load_corpus(path: str | Path) -> TaskCorpus:
    """Load a canonical tasks file or a RosettaCode-style directory tree.

    Unusable records are skipped and listed under provenance["skips"];
    more than 50% malformed records is a hard error, as is any duplicate
    id.
    """
    path = Path(path)
    if path.is_file():
        return _load_jsonl(path)
    if path.is_dir():
        root = path / "Task" if (path / "Task").is_dir() else path
        return _load_tree(root, source=path)
    raise CorpusLoadError(f"corpus path does not exist: {path}")


def _load_jsonl(path: Path) -> TaskCorpus:
    tasks: dict[str, Task] = {}
    skips: list[dict] = []
    total = 0
    malformed = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                record = json.loads(line)
                task = Task.create(
                    id=str(record["id"]),
                    name=str(record.get("name", record["id"])),
                    description=str(record.get("description", "")),
                    category=str(record.get("category", DEFAULT_CATEGORY)),
                    ground_truth=str(record["ground_truth"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                malformed += 1
                skips.append(
                    {"id": f"record-{lineno}", "reason": "malformed", "detail": str(exc)}
                )
                continue
            if task.id in tasks:
                raise DuplicateTaskIdError(f"duplicate task id {task.id!r} at record {lineno}")
            tasks[task.id] = task
    if total and malformed * 2 > total:
        raise CorpusLoadError(
            f"{malformed} of {total} records malformed in {path}; aborting"
        )
    return TaskCorpus(
        tasks=_sorted_by_id(tasks.values()),
        provenance={"source": str(path), "kind": "jsonl", "skips": skips},
    )


def _load_tree(root: Path, source: Path) -> TaskCorpus:
    tasks: dict[str, Task] = {}
    skips: list[dict] = []
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        solution = _find_c_solution(folder)
        if solution is None:
            skips.append(
                {"id": folder.name, "reason": "no-c-solution", "detail": str(folder)}
            )
            continue
        ground_truth = solution.read_text(encoding="utf-8", errors="replace")
        if not ground_truth:
            skips.append(
                {"id": folder.name, "reason": "empty-solution", "detail": str(solution)}
            )
            continue
        task = Task.create(
            id=folder.name,
            name=folder.name,
            description=_read_description(folder),
            category=_read_category(folder),
            ground_truth=ground_truth,
        )
        if task.id in tasks:
            raise DuplicateTaskIdError(f"duplicate task id {task.id!r}")
        tasks[task.id] = task
    return TaskCorpus(
        tasks=_sorted_by_id(tasks.values()),
        provenance={"source": str(source), "kind": "tree", "skips": skips},
    )


def _find_c_solution(folder: Path) -> Path | None:
    for candidates in (sorted((folder / "C").glob("*.c")), sorted(folder.glob("*.c"))):
        if candidates:
            return candidates[0]
    return None


def _read_description(folder: Path) -> str:
    for name in _DESCRIPTION_FILES:
        candidate = folder / name
        if candidate.is_file():
            return candidate.read_text(encoding="utf-8", errors="replace")
    return ""


def _read_category(folder: Path) -> str:
    for name in _META_FILES:
        candidate = folder / name
        if not candidate.is_file():
            continue
        try:
            meta = yaml.safe_load(candidate.read_text(encoding="utf-8"))
        except yaml.YAMLError:
            return DEFAULT_CATEGORY
        if not isinstance(meta, dict):
            return DEFAULT_CATEGORY
        if isinstance(meta.get("category"), str):
            return meta["category"]
        categories = meta.get("categories")
        if isinstance(categories, list) and categories:
            return str(categories[0])  # first listed wins
        return DEFAULT_CATEGORY
    return DEFAULT_CATEGORY


def filter_compilable(
    corpus: TaskCorpus, cc: CompilerConfig, jobs: int | None = None
) -> TaskCorpus:
    """Keep only tasks whose ground truth compiles under `cc`.

    Rejections (with the first diagnostic) land in
    provenance["rejections"]. Compiles run in a bounded worker pool; each
    uses its own scratch directory.
    """
    resolve_compiler(cc)  # hard error before any task is processed
    workers = jobs or min(32, os.cpu_count() or 4)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda t: compile_source(t.ground_truth, cc), corpus.tasks))

    kept: list[Task] = []
    rejections: list[dict] = []
    for task, outcome in zip(corpus.tasks, outcomes):
        if outcome.success:
            kept.append(task)
        else:
            first = outcome.diagnostics[0].message if outcome.diagnostics else "no diagnostics"
            rejections.append(
                {"id": task.id, "reason": "does-not-compile", "detail": first}
            )
    provenance = dict(corpus.provenance)
    provenance["filter"] = {
        "compiler": cc.compiler_path,
        "flags": list(cc.flags),
        "timeout": cc.timeout,
    }
    provenance["rejections"] = rejections
    return TaskCorpus(tasks=tuple(kept), provenance=provenance)


def write_report(entries: Iterable[dict], path: str | Path) -> None:
    """Write a skip/reject report: JSONL of {"id", "reason", "detail"}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(
                json.dumps(
                    {
                        "id": entry.get("id", ""),
                        "reason": entry.get("reason", ""),
                        "detail": entry.get("detail", ""),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
