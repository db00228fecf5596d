"""Command-line front end.

Subcommands: prepare (build + filter the canonical corpus), run (execute
baseline/agent protocols), report (tables, correlations, figures),
classify (failure categories CSV), fixtures regen (refresh golden
compiler stderr fixtures).

Exit codes: 0 success, 1 usage, 2 environment (compiler or endpoint
missing), 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ccloop import __version__
from ccloop.compiler import CompilerNotFoundError, compile_source, compiler_version
from ccloop.config import ConfigError, RunConfig, load_config, parse_config
from ccloop.corpus import CorpusLoadError, filter_compilable, load_corpus, write_report
from ccloop.figures import render_figures
from ccloop.reports import (
    check_taxonomy_version,
    compute_report_data,
    write_classified,
    write_reports,
)
from ccloop.runner import read_logs, run_all
from ccloop.taxonomy import TaxonomyVersionError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENVIRONMENT = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccloop", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ccloop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="configuration file (YAML or JSON)")
        p.add_argument("--out", type=Path, help="output directory override")
        p.add_argument("--jobs", type=int, help="worker pool size override")

    p_prepare = sub.add_parser("prepare", help="build and compile-filter the corpus")
    common(p_prepare)
    p_prepare.add_argument(
        "--input", type=Path, help="corpus source (canonical JSONL or task tree)"
    )
    p_prepare.set_defaults(handler=cmd_prepare)

    p_run = sub.add_parser("run", help="run configured models over the corpus")
    common(p_run)
    p_run.add_argument("--models", nargs="+", help="restrict to these model names")
    p_run.add_argument(
        "--mode", choices=["baseline", "agent", "both"], help="protocol(s) to run"
    )
    p_run.add_argument("--max-iterations", type=int, help="agent iteration cap")
    p_run.add_argument(
        "--resume",
        action="store_true",
        help="skip tasks already in the log files (this is also the default)",
    )
    p_run.add_argument(
        "--fresh", action="store_true", help="discard existing log files first"
    )
    p_run.set_defaults(handler=cmd_run)

    p_report = sub.add_parser("report", help="generate tables, figures, and summary")
    common(p_report)
    p_report.set_defaults(handler=cmd_report)

    p_classify = sub.add_parser("classify", help="write the failure-category CSV")
    common(p_classify)
    p_classify.set_defaults(handler=cmd_classify)

    p_fixtures = sub.add_parser("fixtures", help="fixture management")
    fixtures_sub = p_fixtures.add_subparsers(dest="fixtures_command", required=True)
    p_regen = fixtures_sub.add_parser(
        "regen", help="recompile fixture sources and refresh golden stderr"
    )
    common(p_regen)
    p_regen.add_argument(
        "--dir",
        type=Path,
        default=Path("fixtures/compiler"),
        help="fixture directory (default: fixtures/compiler)",
    )
    p_regen.set_defaults(handler=cmd_fixtures_regen)

    return parser


def _load_run_config(args) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    else:
        config = parse_config({}, base_dir=Path.cwd())
    updates = {}
    if getattr(args, "out", None):
        updates["out_dir"] = args.out
    if getattr(args, "jobs", None):
        updates["jobs"] = args.jobs
    if getattr(args, "max_iterations", None):
        updates["max_iterations"] = args.max_iterations
    if getattr(args, "mode", None):
        updates["modes"] = (
            ("baseline", "agent") if args.mode == "both" else (args.mode,)
        )
    if getattr(args, "models", None):
        chosen = tuple(m for m in config.models if m.spec.name in set(args.models))
        missing = set(args.models) - {m.spec.name for m in chosen}
        if missing:
            raise ConfigError(f"unknown model(s): {sorted(missing)}")
        updates["models"] = chosen
    if updates:
        config = replace(config, **updates)
    return config


def cmd_prepare(args) -> int:
    config = _load_run_config(args)
    source = args.input or config.corpus_source or config.corpus_path
    corpus = load_corpus(source)
    if len(corpus) == 0:
        print(f"error: no tasks found in {source}", file=sys.stderr)
        return EXIT_DATA
    filtered = filter_compilable(corpus, config.compiler, jobs=config.jobs)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    tasks_path = config.out_dir / "tasks.jsonl"
    filtered.write_jsonl(tasks_path)
    rejected_path = config.out_dir / "rejected.jsonl"
    entries = list(corpus.provenance.get("skips", [])) + list(
        filtered.provenance.get("rejections", [])
    )
    write_report(entries, rejected_path)
    print(
        f"prepared {len(filtered)} tasks -> {tasks_path} "
        f"({len(entries)} skipped/rejected -> {rejected_path})"
    )
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_run_config(args)
    if not config.models:
        raise ConfigError("run needs at least one configured model")
    if not config.corpus_path.is_file():
        print(f"error: corpus not found: {config.corpus_path}", file=sys.stderr)
        return EXIT_DATA
    paths = run_all(config, resume=not args.fresh, progress=print)
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def _collect_logs(config: RunConfig):
    logs = []
    for path in sorted(config.out_dir.glob("*__*.jsonl")):
        if path.name.endswith(".audit.jsonl"):
            continue
        logs.extend(read_logs(path))
    return logs


def cmd_report(args) -> int:
    config = _load_run_config(args)
    logs = _collect_logs(config)
    if not logs:
        print(f"error: no run logs under {config.out_dir}", file=sys.stderr)
        return EXIT_DATA
    check_taxonomy_version(config.out_dir)
    corpus = load_corpus(config.corpus_path)
    data = compute_report_data(logs, corpus, config)
    report_dir = config.out_dir / "report"
    written = write_reports(data, report_dir)
    written += render_figures(data, report_dir / "figures")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_classify(args) -> int:
    config = _load_run_config(args)
    logs = _collect_logs(config)
    if not logs:
        print(f"error: no run logs under {config.out_dir}", file=sys.stderr)
        return EXIT_DATA
    corpus = load_corpus(config.corpus_path)
    data = compute_report_data(logs, corpus, config)
    for path in write_classified(data, config.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_fixtures_regen(args) -> int:
    config = _load_run_config(args)
    fixtures_dir: Path = args.dir
    sources = sorted(fixtures_dir.glob("*.c"))
    if not sources:
        print(f"error: no fixture sources in {fixtures_dir}", file=sys.stderr)
        return EXIT_DATA
    cases = {}
    for src in sources:
        outcome = compile_source(src.read_text(encoding="utf-8"), config.compiler)
        src.with_suffix(".stderr").write_text(outcome.stderr_raw, encoding="utf-8")
        cases[src.stem] = {"exit_code": outcome.exit_code, "success": outcome.success}
        print(f"regenerated {src.with_suffix('.stderr')}")
    meta = {
        "compiler_version": compiler_version(config.compiler),
        "flags": list(config.compiler.flags),
        "cases": cases,
    }
    (fixtures_dir / "meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )
    print(f"recorded compiler version: {meta['compiler_version']}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except (ConfigError, UsageError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CompilerNotFoundError as exc:
        print(f"environment error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except (CorpusLoadError, TaxonomyVersionError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
