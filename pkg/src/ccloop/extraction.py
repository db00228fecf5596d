"""Pull candidate source code out of raw model output.

The extraction rule: take the interior of the first complete fenced block
(triple backticks at line start); if no complete block exists, the whole
output is treated as code. Language is guessed from the fence tag when one
is present, otherwise from an ordered keyword table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

FENCE = "```"

LANGUAGES = frozenset(
    {"c", "python", "cpp", "java", "javascript", "rust", "go", "shell", "unknown"}
)

# fence info strings mapped to a canonical language name
_FENCE_TAGS = {
    "c": "c",
    "h": "c",
    "python": "python",
    "python3": "python",
    "py": "python",
    "cpp": "cpp",
    "c++": "cpp",
    "cxx": "cpp",
    "cc": "cpp",
    "java": "java",
    "javascript": "javascript",
    "js": "javascript",
    "node": "javascript",
    "rust": "rust",
    "rs": "rust",
    "go": "go",
    "golang": "go",
    "shell": "shell",
    "bash": "shell",
    "sh": "shell",
    "zsh": "shell",
}

_ALNUM = re.compile(r"[A-Za-z0-9]")


@dataclass(frozen=True)
class ExtractionResult:
    """Outcome of extracting code from one raw model output."""

    code: str
    had_fences: bool
    fence_info: str | None
    prose_present: bool
    block_count: int


@dataclass(frozen=True)
class LanguageGuess:
    language: str
    confidence: str  # fence_tag | heuristic | default


def extract_code(raw_output: str) -> ExtractionResult:
    """Extract the candidate program from raw model output.

    Only complete fenced blocks count: an opening fence with no closing
    fence is ignored, and if no block completes the entire output is the
    code. When several blocks complete, the first one wins.
    """
    lines = raw_output.split("\n")
    blocks: list[tuple[int, int]] = []  # (open line idx, close line idx)
    open_idx: int | None = None
    for i, line in enumerate(lines):
        if not line.startswith(FENCE):
            continue
        if open_idx is None:
            open_idx = i
        else:
            blocks.append((open_idx, i))
            open_idx = None

    if not blocks:
        return ExtractionResult(
            code=raw_output,
            had_fences=False,
            fence_info=None,
            prose_present=False,
            block_count=0,
        )

    first_open, first_close = blocks[0]
    code = "\n".join(lines[first_open + 1 : first_close])
    info = lines[first_open][len(FENCE) :].strip()

    fenced_lines = set()
    for lo, hi in blocks:
        fenced_lines.update(range(lo, hi + 1))
    prose = any(
        line.strip() for i, line in enumerate(lines) if i not in fenced_lines
    )

    return ExtractionResult(
        code=code,
        had_fences=True,
        fence_info=info or None,
        prose_present=prose,
        block_count=len(blocks),
    )


# Ordered keyword heuristics; first match wins. The go/rust/java/javascript
# rows sit above the python row because those languages also use bare
# `import` statements; ordering was settled against the hand-labeled
# fixtures in the test suite.
_HEURISTICS: tuple[tuple[str, re.Pattern[str]], ...] = (
    ("go", re.compile(r"^\s*package\s+main\b", re.MULTILINE)),
    ("rust", re.compile(r"\bfn\s+main\s*\(")),
    ("java", re.compile(r"\bpublic\s+class\b")),
    ("cpp", re.compile(r"#include\s*<iostream>|std::")),
    ("javascript", re.compile(r"\bconsole\.log\s*\(")),
    ("python", re.compile(r"^\s*(?:def\s|import\s)", re.MULTILINE)),
    ("c", re.compile(r"#include\s*[<\"]|\bint\s+main\b")),
)


def detect_language(result: ExtractionResult) -> LanguageGuess:
    """Guess the programming language of extracted code.

    A recognized fence tag wins outright; otherwise keyword heuristics run
    in order; code with no alphanumeric content is unknown; everything else
    defaults to C.
    """
    if result.fence_info:
        tag = result.fence_info.split()[0].lower()
        if tag in _FENCE_TAGS:
            return LanguageGuess(_FENCE_TAGS[tag], "fence_tag")

    code = result.code
    if not _ALNUM.search(code):
        return LanguageGuess("unknown", "default")

    shebang = _shebang_language(code)
    if shebang is not None:
        return LanguageGuess(shebang, "heuristic")

    for language, pattern in _HEURISTICS:
        if language == "python" and "#include" in code:
            continue
        if pattern.search(code):
            return LanguageGuess(language, "heuristic")

    return LanguageGuess("c", "default")


def _shebang_language(code: str) -> str | None:
    first = code.lstrip("\n").split("\n", 1)[0]
    if not first.startswith("#!"):
        return None
    if "python" in first:
        return "python"
    if "node" in first:
        return "javascript"
    return "shell"
