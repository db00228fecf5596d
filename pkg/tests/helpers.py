"""Shared test data: paper-derived fixture tables, synthetic log builders,
and the hand-labeled output corpora used by both the module tests and the
acceptance suite."""

from __future__ import annotations

from ccloop.compiler import CompileOutcome, CompilerConfig, compile_source
from ccloop.corpus import Task
from ccloop.extraction import extract_code
from ccloop.loop import IterationRecord, TaskRunLog

# Published per-model figures: declared parameter count (billions),
# baseline success %, agent success %, and per-iteration first-success
# counts over the 699-task corpus.
MODEL_TABLE = [
    # name, size_b, base_pct, agent_pct, iteration counts
    ("Code Llama 7B", 7, 48.2, 78.8, [324, 126, 59, 34, 8]),
    ("Gemma 2 2B", 2, 60.4, 72.5, [425, 55, 17, 6, 6]),
    ("Gemma 3 12B", 12, 84.5, 94.7, [598, 56, 5, 1, 2]),
    ("Gemma 3 1B", 1, 32.9, 38.2, [241, 14, 7, 2, 3]),
    ("Gemma 3 27B", 27, 90.3, 98.0, [647, 32, 5, 1, 0]),
    ("GPT OSS 20B", 20, 84.3, 97.7, [593, 54, 21, 12, 3]),
    ("Llama 3.2 1B", 1, 38.3, 55.2, [272, 58, 26, 19, 12]),
    ("Llama 3.2 3B", 3, 52.9, 72.1, [357, 122, 16, 9, 0]),
    ("Llama 3.3 70B", 70, 92.0, 99.9, [656, 40, 1, 1, 0]),
    ("Mistral 7B", 7, 48.4, 73.7, [356, 89, 35, 23, 12]),
    ("Phi-4 14B", 14, 84.7, 98.3, [589, 73, 14, 7, 5]),
    ("Qwen 3 30B", 30, 62.7, 95.7, [479, 141, 42, 2, 5]),
    ("Qwen 3 4B", 4, 18.0, 97.4, [106, 421, 120, 28, 6]),
    ("SmolLM 2 1.7B", 1.7, 39.2, 50.2, [264, 48, 16, 8, 15]),
    ("SmolLM 2 135M", 0.135, 2.9, 12.7, [15, 27, 17, 16, 14]),
    ("SmolLM 2 360M", 0.36, 7.4, 25.5, [67, 65, 16, 18, 16]),
]

CORPUS_SIZE = 699

BROKEN_C = "```c\nint main(void){return 0\n```"
FIXED_C = "```c\nint main(void){return 0;}\n```"


def make_task(task_id: str = "t1", description: str = "Write a C program.") -> Task:
    return make_task_with(task_id, description, "int main(void){return 0;}")


def make_task_with(task_id: str, description: str, ground_truth: str) -> Task:
    return Task.create(
        id=task_id,
        name=task_id,
        description=description,
        category="Other",
        ground_truth=ground_truth,
    )


def synthetic_outcome(success: bool) -> CompileOutcome:
    return CompileOutcome(
        success=success,
        exit_code=0 if success else 1,
        diagnostics=(),
        stderr_raw="" if success else "main.c:1:1: error: synthetic\n",
        duration=0.0,
    )


def synthetic_iteration(index: int, success: bool, code: str = "int x;") -> IterationRecord:
    return IterationRecord(
        index=index,
        prompt_sent=f"prompt {index}",
        raw_output=code,
        extraction=extract_code(code),
        compile=synthetic_outcome(success),
        model_latency=0.0,
    )


def synthetic_log(
    task_id: str,
    model: str,
    mode: str,
    success_iteration: int | None,
    total_iterations: int | None = None,
) -> TaskRunLog:
    """A log that first compiles at `success_iteration` (None = never)."""
    if mode == "baseline":
        n = 1
    elif total_iterations is not None:
        n = total_iterations
    else:
        n = success_iteration if success_iteration is not None else 5
    records = [
        synthetic_iteration(k, success=(success_iteration == k)) for k in range(1, n + 1)
    ]
    return TaskRunLog(
        task_id=task_id,
        model_name=model,
        mode=mode,
        iterations=tuple(records),
        succeeded=success_iteration is not None,
        success_iteration=success_iteration,
    )


def logs_from_histogram(model: str, counts: list[int], total_tasks: int) -> list[TaskRunLog]:
    """Synthetic agent logs realizing a first-success-per-iteration
    histogram over `total_tasks` tasks."""
    logs = []
    task_no = 0
    for iteration, n in enumerate(counts, start=1):
        for _ in range(n):
            task_no += 1
            logs.append(synthetic_log(f"task-{task_no:04d}", model, "agent", iteration))
    while task_no < total_tasks:
        task_no += 1
        logs.append(
            synthetic_log(f"task-{task_no:04d}", model, "agent", None, total_iterations=5)
        )
    return logs


# ---------------------------------------------------------------------------
# extraction fixtures: (raw model output, expected code, had_fences,
# fence_info, block_count)

EXTRACTION_FIXTURES = [
    ("```c\nint main(){}\n```", "int main(){}", True, "c", 1),
    ("int main(){}", "int main(){}", False, None, 0),
    ("```c\nA\n```\ntext\n```c\nB\n```", "A", True, "c", 2),
    ("```\nbare fence\n```", "bare fence", True, None, 1),
    ("```python\nprint(1)\n```", "print(1)", True, "python", 1),
    ("Sure, here you go:\n```c\nint x;\n```", "int x;", True, "c", 1),
    ("```c\nint x;\n```\nHope this helps!", "int x;", True, "c", 1),
    ("```c\nline1\nline2\n```", "line1\nline2", True, "c", 1),
    ("```c\n\n```", "", True, "c", 1),
    ("```c\nunterminated fence", "```c\nunterminated fence", False, None, 0),
    ("no fences at all\njust text", "no fences at all\njust text", False, None, 0),
    ("   ```c\nindented fence is not a fence\n```c\nX\n```",
     "X", True, "c", 1),
    ("``` c \nspaced tag\n```", "spaced tag", True, "c", 1),
    ("prefix\n```\nA\n```\nmid\n```\nB\n```\nsuffix", "A", True, None, 2),
    ("```c\nfirst\n```\n```c\nsecond\n```\n```c\nthird\n```", "first", True, "c", 3),
    ("text before\n```cpp\n#include <iostream>\n```", "#include <iostream>", True, "cpp", 1),
    ("```\n```", "", True, None, 1),
    ("````\nnot special, still a fence line\n````",
     "not special, still a fence line", True, "`", 1),
    ("```c\nbody\n```\n```c\ntrailing unterminated", "body", True, "c", 1),
    ("Only prose, then an empty trailing fence opener\n```",
     "Only prose, then an empty trailing fence opener\n```", False, None, 0),
    ("\n```c\nleading blank line before fence\n```\n",
     "leading blank line before fence", True, "c", 1),
    ("```C\nupper tag\n```", "upper tag", True, "C", 1),
]

# hand-labeled language fixtures: (raw output, expected language,
# expected confidence)
LANGUAGE_FIXTURES = [
    ("```python\ndef main():\n    pass\n```", "python", "fence_tag"),
    ("```c\nwhatever\n```", "c", "fence_tag"),
    ("```cpp\nint main(){}\n```", "cpp", "fence_tag"),
    ("```js\nconsole.log(1)\n```", "javascript", "fence_tag"),
    ("```rust\nfn main(){}\n```", "rust", "fence_tag"),
    ("```bash\nls\n```", "shell", "fence_tag"),
    ("#include <stdio.h>\nint main(void){return 0;}", "c", "heuristic"),
    ("def main():\n    print('x')", "python", "heuristic"),
    ("import sys\nprint(sys.argv)", "python", "heuristic"),
    ("#include <iostream>\nint main(){std::cout << 1;}", "cpp", "heuristic"),
    ("using namespace std;\nint f(){return std::max(1,2);}", "cpp", "heuristic"),
    ("import java.util.*;\npublic class Main { }", "java", "heuristic"),
    ("fn main() {\n    println!(\"hi\");\n}", "rust", "heuristic"),
    ("use std::io;\nfn main() { }", "rust", "heuristic"),
    ("package main\nimport \"fmt\"\nfunc main(){}", "go", "heuristic"),
    ("const x = 1;\nconsole.log(x);", "javascript", "heuristic"),
    ("#!/usr/bin/env python\nprint('hello')", "python", "heuristic"),
    ("#!/bin/bash\necho hi", "shell", "heuristic"),
    ("int main(void){return 0;}", "c", "heuristic"),
    ("struct point { int x; int y; };", "c", "default"),
]


# ---------------------------------------------------------------------------
# failure-taxonomy corpus: 30 raw outputs with hand labels, 5 per category.
# Labels name what a human annotator would assign to the final output.

TAXONOMY_FIXTURES = [
    # MissingCode: no code at all (prose, empty, comments)
    ("Sure! Here is an explanation of how such a program would work in principle.",
     "MissingCode"),
    ("", "MissingCode"),
    ("I am sorry, but I cannot produce that program for you today.", "MissingCode"),
    ("```text\nThis task needs a loop and a counter to work correctly.\n```",
     "MissingCode"),
    ("// TODO: implement the solution\n// (left as an exercise)", "MissingCode"),
    # LanguageMismatch: real code, wrong language
    ("```python\ndef main():\n    print('hello')\nmain()\n```", "LanguageMismatch"),
    ("def main():\n    print('hello')\n\nmain()", "LanguageMismatch"),
    ("```cpp\n#include <iostream>\nint main(){ std::cout << 42; }\n```",
     "LanguageMismatch"),
    ("```rust\nfn main() { println!(\"42\"); }\n```", "LanguageMismatch"),
    ("import java.util.Scanner;\npublic class Main { public static void main(String[] a){} }",
     "LanguageMismatch"),
    # MarkdownError: unfenced C mixed with prose
    ("Here is the program you asked for today:\nint main(void){return 0;}\nLet me know if you need anything else.",
     "MarkdownError"),
    ("The following code solves the task nicely:\n#include <stdio.h>\nint main(void){printf(\"x\");return 0;}",
     "MarkdownError"),
    ("int main(void){return 0;}\nThis version simply returns zero immediately.",
     "MarkdownError"),
    ("First we include the standard header files:\n#include <stdio.h>\nThen we write the main function below:\nint main(void){return 0;}",
     "MarkdownError"),
    ("Sure thing, the answer is shown below:\nint main(void)\n{\n    return 0;\n}\nHope that helps you out.",
     "MarkdownError"),
    # SyntaxError
    ("```c\nint main(void){return 0\n```", "SyntaxError"),
    ("```c\nint main(void){return 0;\n```", "SyntaxError"),
    ("```c\nint main(void){int x = ;return 0;}\n```", "SyntaxError"),
    ("```c\nint main(void){char *s = \"unterminated;return 0;}\n```", "SyntaxError"),
    ("```c\nint main(void){else return 1;}\n```", "SyntaxError"),
    # UndefinedReference: missing main or undefined function at link time
    ("```c\nint notmain(void){return 0;}\n```", "UndefinedReference"),
    ("```c\nint helper(void){return 1;}\n```", "UndefinedReference"),
    ("```c\nvoid solve(void);\nint main(void){solve();return 0;}\n```",
     "UndefinedReference"),
    ("```c\nint compute(int n);\nint main(void){return compute(3);}\n```",
     "UndefinedReference"),
    ("```c\nstatic int value = 42;\n```", "UndefinedReference"),
    # LinkingError: references to non-existing header files
    ("```c\n#include \"missing_one.h\"\nint main(void){return 0;}\n```", "LinkingError"),
    ("```c\n#include <surely_not_a_real_header.h>\nint main(void){return 0;}\n```",
     "LinkingError"),
    ("```c\n#include \"utils/helpers.h\"\nint main(void){return 0;}\n```", "LinkingError"),
    ("```c\n#include \"my_library.h\"\nint main(void){return lib_call();}\n```",
     "LinkingError"),
    ("```c\n#include <custom_math_routines.h>\nint main(void){return 0;}\n```",
     "LinkingError"),
]


def build_failed_iteration(raw_output: str, cfg: CompilerConfig) -> IterationRecord:
    """Run a raw output through extraction + real compilation, asserting
    the compile fails (taxonomy applies to failed finals only)."""
    extraction = extract_code(raw_output)
    outcome = compile_source(extraction.code, cfg)
    assert not outcome.success, f"fixture unexpectedly compiled: {raw_output[:60]!r}"
    return IterationRecord(
        index=1,
        prompt_sent="p",
        raw_output=raw_output,
        extraction=extraction,
        compile=outcome,
        model_latency=0.0,
    )
