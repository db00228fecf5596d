"""Run configuration: YAML/JSON file plus CLI flag overrides.

Schema (all keys optional unless noted):

    corpus: tasks.jsonl          # canonical corpus used by run/report
    corpus_source: raw/          # ingestion source for `prepare`
    out: out/                    # output directory
    modes: [baseline, agent]
    max_iterations: 5
    jobs: 4
    transcript_cap: null         # max chat messages kept per transcript
    compiler:
      path: gcc
      flags: [-lm]
      timeout: 30
      feedback_bytes: 8192
      max_source_bytes: 1048576
      workdir_root: null
    buckets: {slight: 1, significant: 4}
    models:                      # required for run
      - name: my-model
        parameter_count: 4000000000
        backend: http            # http | scripted
        endpoint: http://localhost:8000/v1
        api_key_env: OPENAI_API_KEY
        headers: {}
        temperature: 0.0
        seed: 0
        max_output_tokens: 2048
        request_timeout: 120
        max_in_flight: 4
      - name: replay
        backend: scripted
        script: ["```c\\nint main(void){return 0;}\\n```"]
        # or script_file: replies.json (JSON list of strings)

Scripted models replay their script afresh for every task, which keeps
runs deterministic under parallelism.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ccloop.compiler import (
    CompilerConfig,
    DEFAULT_FEEDBACK_CAP,
    DEFAULT_SOURCE_CAP,
    DEFAULT_TIMEOUT,
)
from ccloop.gateway import DEFAULT_MAX_IN_FLIGHT, ModelSpec
from ccloop.taxonomy import BucketThresholds

MODES = ("baseline", "agent")


class ConfigError(ValueError):
    """Configuration file or flags are unusable."""


@dataclass(frozen=True)
class ModelConfig:
    spec: ModelSpec
    backend: str = "http"  # http | scripted
    script: tuple[str, ...] = ()
    api_key_env: str | None = None
    headers: dict[str, str] = field(default_factory=dict)
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def api_key(self) -> str | None:
        if not self.api_key_env:
            return None
        return os.environ.get(self.api_key_env)


@dataclass(frozen=True)
class RunConfig:
    corpus_path: Path
    out_dir: Path
    models: tuple[ModelConfig, ...]
    modes: tuple[str, ...]
    corpus_source: Path | None = None
    max_iterations: int = 5
    jobs: int = 4
    transcript_cap: int | None = None
    compiler: CompilerConfig = CompilerConfig()
    thresholds: BucketThresholds = BucketThresholds()

    def model(self, name: str) -> ModelConfig:
        for m in self.models:
            if m.spec.name == name:
                return m
        raise ConfigError(f"no model named {name!r} in configuration")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    base = base_dir or Path.cwd()

    def _resolve(value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    modes = tuple(raw.get("modes", list(MODES)))
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
    if not modes:
        raise ConfigError("at least one mode is required")

    compiler_raw = raw.get("compiler", {}) or {}
    try:
        compiler = CompilerConfig(
            compiler_path=compiler_raw.get("path", "gcc"),
            flags=tuple(compiler_raw.get("flags", ["-lm"])),
            timeout=float(compiler_raw.get("timeout", DEFAULT_TIMEOUT)),
            workdir_root=compiler_raw.get("workdir_root"),
            max_source_bytes=int(compiler_raw.get("max_source_bytes", DEFAULT_SOURCE_CAP)),
            feedback_bytes=int(compiler_raw.get("feedback_bytes", DEFAULT_FEEDBACK_CAP)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    buckets_raw = raw.get("buckets", {}) or {}
    try:
        thresholds = BucketThresholds(
            slight_min=int(buckets_raw.get("slight", 1)),
            significant_min=int(buckets_raw.get("significant", 4)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    models = tuple(
        _parse_model(entry, base) for entry in raw.get("models", []) or []
    )

    cap = raw.get("transcript_cap")
    return RunConfig(
        corpus_path=_resolve(raw.get("corpus", "tasks.jsonl")),
        corpus_source=_resolve(raw.get("corpus_source")),
        out_dir=_resolve(raw.get("out", "out")),
        models=models,
        modes=modes,
        max_iterations=int(raw.get("max_iterations", 5)),
        jobs=int(raw.get("jobs", 4)),
        transcript_cap=int(cap) if cap is not None else None,
        compiler=compiler,
        thresholds=thresholds,
    )


def _parse_model(entry: dict, base: Path) -> ModelConfig:
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(f"model entry needs a name: {entry!r}")
    backend = entry.get("backend", "http")
    if backend not in ("http", "scripted"):
        raise ConfigError(f"unknown backend {backend!r} for model {entry['name']!r}")

    script: tuple[str, ...] = ()
    if backend == "scripted":
        if "script_file" in entry:
            script_path = Path(entry["script_file"])
            if not script_path.is_absolute():
                script_path = base / script_path
            try:
                loaded = json.loads(script_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read script_file {script_path}: {exc}") from exc
            script = tuple(str(s) for s in loaded)
        else:
            script = tuple(str(s) for s in entry.get("script", []))
        if not script:
            raise ConfigError(f"scripted model {entry['name']!r} has an empty script")

    seed = entry.get("seed", 0)
    try:
        spec = ModelSpec(
            name=str(entry["name"]),
            parameter_count=int(entry.get("parameter_count", 0)),
            endpoint=str(entry.get("endpoint", "")),
            temperature=float(entry.get("temperature", 0.0)),
            seed=int(seed) if seed is not None else None,
            max_output_tokens=int(entry.get("max_output_tokens", 2048)),
            request_timeout=float(entry.get("request_timeout", 120.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"model {entry['name']!r}: {exc}") from exc

    if backend == "http" and not spec.endpoint:
        raise ConfigError(f"http model {spec.name!r} needs an endpoint")

    return ModelConfig(
        spec=spec,
        backend=backend,
        script=script,
        api_key_env=entry.get("api_key_env"),
        headers=dict(entry.get("headers", {}) or {}),
        max_in_flight=int(entry.get("max_in_flight", DEFAULT_MAX_IN_FLIGHT)),
    )
