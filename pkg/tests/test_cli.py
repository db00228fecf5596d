from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest
import yaml

from ccloop import metrics
from ccloop.cli import main
from ccloop.loop import log_from_json
from helpers import BROKEN_C, FIXED_C

PROSE = "Here is the program you asked for today:\nhave fun with it"
PYTHON = "```python\ndef main():\n    print('x')\n```"


def write_corpus(path: Path, n: int = 3) -> Path:
    records = [
        {
            "id": f"task-{i:02d}",
            "name": f"Task {i}",
            "description": f"Write program number {i}.",
            "category": "Other",
            "ground_truth": "int main(void){return 0;}",
        }
        for i in range(n)
    ]
    path.write_text(
        "".join(json.dumps(r) + "\n" for r in records), encoding="utf-8"
    )
    return path


def write_config(tmp_path: Path, models: list[dict], **over) -> Path:
    config = {
        "corpus": str(tmp_path / "tasks.jsonl"),
        "out": str(tmp_path / "out"),
        "modes": ["baseline", "agent"],
        "jobs": 2,
        "models": models,
    }
    config.update(over)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path


def scripted(name: str, script: list[str], size: int = 0) -> dict:
    return {
        "name": name,
        "backend": "scripted",
        "script": script,
        "parameter_count": size,
    }


def read_log(path: Path):
    return [
        log_from_json(json.loads(line))
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


# --- prepare -------------------------------------------------------------------


def test_prepare_writes_tasks_and_rejections(tmp_path):
    source = tmp_path / "source.jsonl"
    records = [
        {"id": "good", "name": "g", "description": "d", "category": "c",
         "ground_truth": "int main(void){return 0;}"},
        {"id": "broken", "name": "b", "description": "d", "category": "c",
         "ground_truth": "int main(void){return 0"},
    ]
    source.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    config = write_config(tmp_path, [], corpus_source=str(source))
    assert main(["prepare", "--config", str(config)]) == 0
    tasks = (tmp_path / "out" / "tasks.jsonl").read_text(encoding="utf-8")
    assert json.loads(tasks)["id"] == "good"
    rejected = [
        json.loads(line)
        for line in (tmp_path / "out" / "rejected.jsonl").read_text().splitlines()
    ]
    assert [r["id"] for r in rejected] == ["broken"]


def test_prepare_empty_source_is_data_error(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    config = write_config(tmp_path, [], corpus_source=str(empty))
    assert main(["prepare", "--config", str(config)]) == 3


def test_prepare_is_deterministic(tmp_path):
    source = write_corpus(tmp_path / "source.jsonl", 4)
    config = write_config(tmp_path, [], corpus_source=str(source))
    assert main(["prepare", "--config", str(config)]) == 0
    first = (tmp_path / "out" / "tasks.jsonl").read_bytes()
    assert main(["prepare", "--config", str(config)]) == 0
    assert (tmp_path / "out" / "tasks.jsonl").read_bytes() == first


# --- run -----------------------------------------------------------------------


def test_run_writes_one_file_per_model_mode(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 10)
    config = write_config(
        tmp_path,
        [scripted("m1", [FIXED_C] * 5), scripted("m2", [BROKEN_C] * 5)],
    )
    assert main(["run", "--config", str(config)]) == 0
    out = tmp_path / "out"
    files = sorted(p.name for p in out.glob("*__*.jsonl"))
    assert files == [
        "m1__agent.jsonl", "m1__baseline.jsonl",
        "m2__agent.jsonl", "m2__baseline.jsonl",
    ]
    for name in files:
        assert len(read_log(out / name)) == 10


def test_run_agent_always_failing_hits_cap(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 2)
    config = write_config(tmp_path, [scripted("m", [BROKEN_C] * 5)], modes=["agent"])
    assert main(["run", "--config", str(config)]) == 0
    for log in read_log(tmp_path / "out" / "m__agent.jsonl"):
        assert len(log.iterations) == 5 and not log.succeeded


def test_run_resumes_without_duplicates(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 6)
    config = write_config(tmp_path, [scripted("m", [FIXED_C])], modes=["baseline"])
    assert main(["run", "--config", str(config)]) == 0
    path = tmp_path / "out" / "m__baseline.jsonl"
    lines = path.read_text(encoding="utf-8").splitlines()
    # simulate a run killed after three tasks, mid-write of the fourth
    path.write_text("\n".join(lines[:3]) + "\n" + lines[3][: len(lines[3]) // 2],
                    encoding="utf-8")
    assert main(["run", "--config", str(config)]) == 0
    logs = read_log(path)
    ids = [log.task_id for log in logs]
    assert len(ids) == len(set(ids)) == 6


def test_run_mode_and_model_flags(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 2)
    config = write_config(
        tmp_path, [scripted("m1", [FIXED_C]), scripted("m2", [FIXED_C])]
    )
    assert main(
        ["run", "--config", str(config), "--models", "m1", "--mode", "baseline"]
    ) == 0
    files = sorted(p.name for p in (tmp_path / "out").glob("*__*.jsonl"))
    assert files == ["m1__baseline.jsonl"]


def test_run_without_models_is_usage_error(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 1)
    config = write_config(tmp_path, [])
    assert main(["run", "--config", str(config)]) == 1


def test_run_missing_corpus_is_data_error(tmp_path):
    config = write_config(tmp_path, [scripted("m", [FIXED_C])])
    assert main(["run", "--config", str(config)]) == 3


def test_run_missing_compiler_is_environment_error(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 1)
    config = write_config(
        tmp_path,
        [scripted("m", [FIXED_C])],
        compiler={"path": "no-such-compiler-zzz"},
    )
    assert main(["run", "--config", str(config)]) == 2


def test_unknown_model_flag_is_usage_error(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 1)
    config = write_config(tmp_path, [scripted("m", [FIXED_C])])
    assert main(["run", "--config", str(config), "--models", "ghost"]) == 1


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1


# --- report and classify ---------------------------------------------------------


@pytest.fixture
def completed_run(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 4)
    config = write_config(
        tmp_path,
        [
            # improves from nothing to everything via repair
            scripted("fixer", [BROKEN_C, FIXED_C] + [BROKEN_C] * 4, size=2_000_000_000),
            # never produces C: prose one-shot, python when iterating
            scripted("wanderer", [PROSE, PYTHON, PYTHON, PYTHON, PYTHON],
                     size=1_000_000_000),
        ],
    )
    assert main(["run", "--config", str(config)]) == 0
    return tmp_path, config


def test_report_tables(completed_run):
    tmp_path, config = completed_run
    assert main(["report", "--config", str(config)]) == 0
    report = tmp_path / "out" / "report"

    with (report / "success_table.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    by_key = {(r["model"], r["mode"]): r for r in rows}
    assert by_key[("fixer", "agent")]["success_rate"] == "1.000000"
    assert by_key[("fixer", "baseline")]["success_rate"] == "0.000000"
    assert by_key[("wanderer", "agent")]["success_rate"] == "0.000000"
    assert by_key[("fixer", "agent")]["codebert_precision"] == ""  # reserved

    with (report / "iteration_table.csv").open() as fh:
        iteration = {r["model"]: r for r in csv.DictReader(fh)}
    assert iteration["fixer"]["iter_2"] == "4"

    with (report / "bucket_summary.csv").open() as fh:
        buckets = {r["bucket"]: int(r["tasks"]) for r in csv.DictReader(fh)}
    # fixer solves all 4 tasks agent-side only: delta 1 per task
    assert buckets["SlightImprovement"] == 4

    summary = (report / "summary.md").read_text(encoding="utf-8")
    assert "ROUGE-1 recall" in summary

    figures = sorted(p.name for p in (report / "figures").glob("*.png"))
    assert "success_rates.png" in figures
    assert "iteration_histogram.png" in figures


def test_report_success_rate_matches_metrics(completed_run):
    tmp_path, config = completed_run
    assert main(["report", "--config", str(config)]) == 0
    logs = read_log(tmp_path / "out" / "fixer__agent.jsonl")
    expected = metrics.success_rate(logs)
    with (tmp_path / "out" / "report" / "success_table.csv").open() as fh:
        row = next(
            r for r in csv.DictReader(fh)
            if r["model"] == "fixer" and r["mode"] == "agent"
        )
    assert float(row["success_rate"]) == expected


def test_report_regeneration_is_byte_identical(completed_run):
    tmp_path, config = completed_run
    assert main(["report", "--config", str(config)]) == 0
    report = tmp_path / "out" / "report"
    before = {
        p.relative_to(report): p.read_bytes() for p in report.rglob("*") if p.is_file()
    }
    assert main(["report", "--config", str(config)]) == 0
    after = {
        p.relative_to(report): p.read_bytes() for p in report.rglob("*") if p.is_file()
    }
    assert before == after


def test_classify_csv(completed_run):
    tmp_path, config = completed_run
    assert main(["classify", "--config", str(config)]) == 0
    with (tmp_path / "out" / "classified_failures.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {
        "task_id", "model", "mode", "category",
        "votes_syntax", "votes_undef", "votes_link",
    }
    wanderer = {
        (r["mode"], r["category"]) for r in rows if r["model"] == "wanderer"
    }
    # classification applies to the final iteration: prose one-shot for the
    # baseline, python after repairs for the agent
    assert wanderer == {
        ("baseline", "MissingCode"),
        ("agent", "LanguageMismatch"),
    }
    meta = json.loads(
        (tmp_path / "out" / "classified_failures.meta.json").read_text()
    )
    assert meta["taxonomy_version"] == "1"


def test_report_rejects_stale_taxonomy(completed_run):
    tmp_path, config = completed_run
    meta = tmp_path / "out" / "classified_failures.meta.json"
    meta.write_text(json.dumps({"taxonomy_version": "0-legacy"}), encoding="utf-8")
    assert main(["report", "--config", str(config)]) == 3


def test_report_single_mode_has_no_reduction(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 2)
    config = write_config(
        tmp_path, [scripted("m", [BROKEN_C] * 5)], modes=["baseline"]
    )
    assert main(["run", "--config", str(config)]) == 0
    assert main(["report", "--config", str(config)]) == 0
    with (tmp_path / "out" / "report" / "category_counts.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["reduction_fraction"] == "" for r in rows)
    syntax = next(r for r in rows if r["category"] == "SyntaxError")
    assert syntax["count_base"] == "2"


def test_report_without_logs_is_data_error(tmp_path):
    write_corpus(tmp_path / "tasks.jsonl", 1)
    config = write_config(tmp_path, [])
    assert main(["report", "--config", str(config)]) == 3


# --- fixtures regen ----------------------------------------------------------------


def test_fixtures_regen(tmp_path):
    fixture_dir = tmp_path / "fix"
    fixture_dir.mkdir()
    (fixture_dir / "ok.c").write_text("int main(void){return 0;}")
    assert main(["fixtures", "regen", "--dir", str(fixture_dir)]) == 0
    assert (fixture_dir / "ok.stderr").read_text() == ""
    meta = json.loads((fixture_dir / "meta.json").read_text())
    assert meta["cases"]["ok"]["success"] is True
    assert meta["compiler_version"]


def test_fixtures_regen_empty_dir(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    assert main(["fixtures", "regen", "--dir", str(empty)]) == 3
