"""Progressive problem-refining harness for multi-step reasoning with
language models: prompt builders, solving strategies, the refine loop, and
a concurrent, resumable evaluation harness over math benchmarks."""

from .answers import CanonicalAnswer, answers_equal, extract_answer, majority_vote
from .backend import (
    Backend,
    CachingBackend,
    Completion,
    CompletionRequest,
    LiveBackend,
    ResponseCache,
    ScriptedBackend,
    cache_key,
)
from .datasets import Problem, load, sample
from .evaluation import RunConfig, RunReport, render_report, run_benchmark, score
from .polish import ConsistencyConfig, PolishConfig, Trajectory, refine, run, select_final
from .prompting import Demo, DemoSet, demo_variants, load_demos
from .solver import (
    SolveResult,
    solve_cot,
    solve_ltm,
    solve_standard,
    solve_with_consistency,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "CachingBackend",
    "CanonicalAnswer",
    "Completion",
    "CompletionRequest",
    "ConsistencyConfig",
    "Demo",
    "DemoSet",
    "LiveBackend",
    "PolishConfig",
    "Problem",
    "ResponseCache",
    "RunConfig",
    "RunReport",
    "ScriptedBackend",
    "SolveResult",
    "Trajectory",
    "answers_equal",
    "cache_key",
    "demo_variants",
    "extract_answer",
    "load",
    "load_demos",
    "majority_vote",
    "refine",
    "render_report",
    "run",
    "run_benchmark",
    "sample",
    "score",
    "select_final",
    "solve_cot",
    "solve_ltm",
    "solve_standard",
    "solve_with_consistency",
]
