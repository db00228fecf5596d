"""Compile candidate C sources with an external gcc-compatible compiler.

Each compile runs in a fresh temporary directory that is removed
afterward; the produced binary is never executed. stderr is captured
bit-exact and parsed into structured diagnostics.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

DEFAULT_TIMEOUT = 30.0
DEFAULT_SOURCE_CAP = 1 << 20  # 1 MiB
DEFAULT_FEEDBACK_CAP = 8192
TRUNCATION_MARKER = "\n...[error message truncated]"

# environment variable name fragments never passed to the compiler child
_SENSITIVE_ENV = ("API", "KEY", "TOKEN", "SECRET", "PASSWORD", "CREDENTIAL")


class CompilerNotFoundError(RuntimeError):
    """The configured compiler binary does not exist or is not executable."""


class SourceTooLargeError(ValueError):
    """Candidate source exceeds the configured size cap."""


@dataclass(frozen=True)
class CompilerConfig:
    compiler_path: str = "gcc"
    flags: tuple[str, ...] = ("-lm",)
    timeout: float = DEFAULT_TIMEOUT
    workdir_root: str | None = None
    max_source_bytes: int = DEFAULT_SOURCE_CAP
    feedback_bytes: int = DEFAULT_FEEDBACK_CAP

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("compile timeout must be positive")
        if "-o" in self.flags:
            raise ValueError("output path is managed by the bridge; drop -o from flags")


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int | None
    column: int | None
    severity: str  # error | warning | fatal | note | linker
    message: str
    raw: str


@dataclass(frozen=True)
class CompileOutcome:
    success: bool
    exit_code: int
    diagnostics: tuple[Diagnostic, ...]
    stderr_raw: str
    duration: float
    timed_out: bool = False


def resolve_compiler(cfg: CompilerConfig) -> str:
    path = shutil.which(cfg.compiler_path)
    if path is None:
        raise CompilerNotFoundError(f"compiler not found: {cfg.compiler_path!r}")
    return path


def compiler_version(cfg: CompilerConfig) -> str:
    path = resolve_compiler(cfg)
    out = subprocess.run(
        [path, "--version"], capture_output=True, text=True, timeout=cfg.timeout
    )
    return out.stdout.splitlines()[0] if out.stdout else "unknown"


def _child_env() -> dict[str, str]:
    return {
        k: v
        for k, v in os.environ.items()
        if not any(fragment in k.upper() for fragment in _SENSITIVE_ENV)
    }


def compile_source(source: str, cfg: CompilerConfig) -> CompileOutcome:
    """Compile `source` as main.c in an isolated scratch directory."""
    compiler = resolve_compiler(cfg)
    encoded = source.encode("utf-8", errors="replace")
    if len(encoded) > cfg.max_source_bytes:
        raise SourceTooLargeError(
            f"source is {len(encoded)} bytes, cap is {cfg.max_source_bytes}"
        )

    if cfg.workdir_root:
        os.makedirs(cfg.workdir_root, exist_ok=True)
    workdir = tempfile.mkdtemp(prefix="ccloop-", dir=cfg.workdir_root)
    try:
        with open(os.path.join(workdir, "main.c"), "wb") as fh:
            fh.write(encoded)
        cmd = [compiler, "main.c", "-o", "scratch.bin", *cfg.flags]
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                cmd, cwd=workdir, capture_output=True, timeout=cfg.timeout, env=_child_env()
            )
        except subprocess.TimeoutExpired as exc:
            stderr = (exc.stderr or b"").decode("utf-8", errors="replace")
            return CompileOutcome(
                success=False,
                exit_code=-1,
                diagnostics=tuple(parse_diagnostics(stderr)),
                stderr_raw=stderr,
                duration=time.perf_counter() - start,
                timed_out=True,
            )
        duration = time.perf_counter() - start
        stderr = proc.stderr.decode("utf-8", errors="replace")
        return CompileOutcome(
            success=proc.returncode == 0,
            exit_code=proc.returncode,
            diagnostics=tuple(parse_diagnostics(stderr)),
            stderr_raw=stderr,
            duration=duration,
        )
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def feedback_excerpt(stderr_raw: str, cap_bytes: int = DEFAULT_FEEDBACK_CAP) -> str:
    """The error text fed back to the model: raw stderr under a byte cap."""
    encoded = stderr_raw.encode("utf-8")
    if len(encoded) <= cap_bytes:
        return stderr_raw
    return encoded[:cap_bytes].decode("utf-8", errors="ignore") + TRUNCATION_MARKER


_DIAG = re.compile(
    r"^(?P<file>[^:\s][^:]*):(?P<line>\d+):(?:(?P<col>\d+):)?\s*"
    r"(?P<sev>fatal error|error|warning|note):\s?(?P<msg>.*)$"
)
_BARE = re.compile(
    r"^(?P<file>[^:\s][^:]*):\s*(?P<sev>fatal error|error|warning|note):\s?(?P<msg>.*)$"
)

_SEVERITY = {"fatal error": "fatal", "error": "error", "warning": "warning", "note": "note"}


def parse_diagnostics(stderr_raw: str) -> list[Diagnostic]:
    """Parse compiler stderr into structured diagnostics.

    Recognizes `file:line[:col]: severity: message` records,
    `file: severity: message` driver/linker records, and
    `undefined reference` linker records. Context lines before the first
    diagnostic (e.g. "main.c: In function 'main':") fold into the next
    diagnostic's raw text; caret and source-echo lines fold into the
    preceding one. Lines with no diagnostic anywhere become a single
    error-severity catch-all. Every non-empty stderr line lands in exactly
    one diagnostic's raw field.
    """
    records: list[dict] = []
    pending: list[str] = []  # lines seen before any diagnostic
    current: dict | None = None

    for line in stderr_raw.split("\n"):
        if not line.strip():
            continue
        record = _match_diagnostic(line)
        if record is not None:
            if pending:
                record["raw"] = pending + record["raw"]
                pending = []
            records.append(record)
            current = record
        elif current is not None:
            current["raw"].append(line)
        else:
            pending.append(line)

    if pending:
        records.append(
            {
                "file": "",
                "line": None,
                "column": None,
                "severity": "error",
                "message": pending[0],
                "raw": pending,
            }
        )

    return [
        Diagnostic(
            file=r["file"],
            line=r["line"],
            column=r["column"],
            severity=r["severity"],
            message=r["message"],
            raw="\n".join(r["raw"]),
        )
        for r in records
    ]


def _match_diagnostic(line: str) -> dict | None:
    if line.startswith("collect2:"):
        return None  # link-stage summary, folds into the preceding record
    if "undefined reference to" in line:
        prefix, _, message = line.partition("undefined reference to")
        return {
            "file": prefix.split(":", 1)[0] if ":" in prefix else "",
            "line": None,
            "column": None,
            "severity": "linker",
            "message": "undefined reference to" + message,
            "raw": [line],
        }
    m = _DIAG.match(line)
    if m:
        return {
            "file": m.group("file"),
            "line": int(m.group("line")),
            "column": int(m.group("col")) if m.group("col") else None,
            "severity": _SEVERITY[m.group("sev")],
            "message": m.group("msg"),
            "raw": [line],
        }
    m = _BARE.match(line)
    if m:
        return {
            "file": m.group("file"),
            "line": None,
            "column": None,
            "severity": _SEVERITY[m.group("sev")],
            "message": m.group("msg"),
            "raw": [line],
        }
    return None
