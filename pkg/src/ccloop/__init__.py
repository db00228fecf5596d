"""Benchmark harness for compiler-in-the-loop C code generation.

A library plus CLI that runs chat language models against a task corpus in
two protocols (single-shot baseline, iterative compile-repair agent),
compiles every candidate with a real C compiler, and reports success rates,
text-similarity metrics, and a failure taxonomy.
"""

__version__ = "0.1.0"

from ccloop.compiler import CompileOutcome, CompilerConfig, Diagnostic, compile_source
from ccloop.corpus import Task, TaskCorpus, filter_compilable, load_corpus, token_count
from ccloop.extraction import ExtractionResult, LanguageGuess, detect_language, extract_code
from ccloop.gateway import ChatMessage, ChatTranscript, HttpBackend, ModelSpec, ScriptedBackend
from ccloop.loop import IterationRecord, TaskRunLog, render_prompts, run_agent, run_baseline
from ccloop.metrics import bleu, iteration_histogram, pearson, rouge1, rows_changed, success_rate
from ccloop.taxonomy import ErrorCategory, bucket_improvement, category_reduction, classify_failure

__all__ = [
    "ChatMessage",
    "ChatTranscript",
    "CompileOutcome",
    "CompilerConfig",
    "Diagnostic",
    "ErrorCategory",
    "ExtractionResult",
    "HttpBackend",
    "IterationRecord",
    "LanguageGuess",
    "ModelSpec",
    "ScriptedBackend",
    "Task",
    "TaskCorpus",
    "TaskRunLog",
    "bleu",
    "bucket_improvement",
    "category_reduction",
    "classify_failure",
    "compile_source",
    "detect_language",
    "extract_code",
    "filter_compilable",
    "iteration_histogram",
    "load_corpus",
    "pearson",
    "render_prompts",
    "rouge1",
    "rows_changed",
    "run_agent",
    "run_baseline",
    "success_rate",
    "token_count",
]
