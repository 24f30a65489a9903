"""Answer-producing strategies: standard few-shot, chain-of-thought,
least-to-most, and a self-consistency wrapper over any of them.

Each solve issues one or more completions and returns a SolveResult whose
calls_used matches the backend call-counter delta exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from . import prompting
from .answers import CanonicalAnswer, answers_equal, extract_answer, find_last_marker, majority_vote
from .backend import Backend, Completion, CompletionRequest, DEFAULT_MAX_TOKENS, cache_key
from .datasets import Problem
from .prompting import DemoSet


@dataclass
class SolveResult:
    answer: CanonicalAnswer
    rationale: str = ""
    subproblem_trace: list[tuple[str, str]] = field(default_factory=list)
    calls_used: int = 0
    prompt_digests: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


class Solver(Protocol):
    def __call__(
        self, problem: Problem, backend: Backend, temperature: float, sample_index: int
    ) -> SolveResult: ...


def _ask(
    prompt: str,
    backend: Backend,
    temperature: float,
    sample_index: int,
    max_tokens: int,
) -> tuple[Completion, str]:
    request = CompletionRequest(
        prompt=prompt,
        temperature=temperature,
        max_tokens=max_tokens,
        sample_index=sample_index,
        model_id=getattr(backend, "model_id", "default"),
    )
    return backend.complete(request), cache_key(request)


def solve_standard(
    problem: Problem,
    demos: DemoSet,
    backend: Backend,
    temperature: float = 0.0,
    sample_index: int = 0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> SolveResult:
    prompt = prompting.build_standard_prompt(demos, problem)
    completion, digest = _ask(prompt, backend, temperature, sample_index, max_tokens)
    answer = extract_answer(completion.text, problem.task)
    return SolveResult(answer=answer, calls_used=1, prompt_digests=[digest])


def solve_cot(
    problem: Problem,
    demos: DemoSet,
    backend: Backend,
    temperature: float = 0.0,
    sample_index: int = 0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> SolveResult:
    prompt = prompting.build_cot_prompt(demos, problem)
    completion, digest = _ask(prompt, backend, temperature, sample_index, max_tokens)
    answer = extract_answer(completion.text, problem.task)
    marker = find_last_marker(completion.text)
    rationale = completion.text[: marker[0]].strip() if marker else ""
    return SolveResult(answer=answer, rationale=rationale, calls_used=1, prompt_digests=[digest])


def solve_ltm(
    problem: Problem,
    reduce_demos: DemoSet,
    solve_demos: DemoSet,
    backend: Backend,
    temperature: float = 0.0,
    sample_index: int = 0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    max_subproblems: int = 8,
) -> SolveResult:
    """Reduce to subproblems, then solve them in order; each step's prompt
    carries all prior (subproblem, answer) pairs. The final answer is the
    answer to the last subproblem."""
    if max_subproblems < 1:
        raise ValueError("max_subproblems must be >= 1")
    digests = []
    warnings = []
    prompt = prompting.build_ltm_reduction_prompt(reduce_demos, problem)
    completion, digest = _ask(prompt, backend, temperature, sample_index, max_tokens)
    digests.append(digest)
    subproblems = prompting.parse_subproblems(completion.text, problem.question)
    if len(subproblems) > max_subproblems:
        warnings.append(
            f"reduction produced {len(subproblems)} subproblems; truncated to {max_subproblems}"
        )
        subproblems = subproblems[:max_subproblems]

    trace: list[tuple[str, str]] = []
    reply_text = ""
    for sub in subproblems:
        prompt = prompting.build_ltm_solve_prompt(solve_demos, problem, trace, sub)
        completion, digest = _ask(prompt, backend, temperature, sample_index, max_tokens)
        digests.append(digest)
        reply_text = completion.text.strip()
        trace.append((sub, reply_text))

    answer = extract_answer(reply_text, problem.task)
    return SolveResult(
        answer=answer,
        subproblem_trace=trace,
        calls_used=1 + len(subproblems),
        prompt_digests=digests,
        warnings=warnings,
    )


def solve_with_consistency(
    inner: Solver,
    problem: Problem,
    backend: Backend,
    n_paths: int,
    temperature: float,
) -> SolveResult:
    """Run a solver over n_paths sampled reasoning paths and majority-vote
    the final answers. Paths use sample_index 0..n-1 so their cache keys
    differ; votes are ordered by path index for reproducible tie-breaks."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if n_paths > 1 and temperature <= 0:
        raise ValueError("self-consistency with n_paths > 1 needs temperature > 0")
    results = [inner(problem, backend, temperature, path) for path in range(n_paths)]
    if n_paths == 1:
        return results[0]
    winner = majority_vote([r.answer for r in results])
    winning = next(r for r in results if answers_equal(r.answer, winner))
    return SolveResult(
        answer=winner,
        rationale=winning.rationale,
        subproblem_trace=winning.subproblem_trace,
        calls_used=sum(r.calls_used for r in results),
        prompt_digests=[d for r in results for d in r.prompt_digests],
        warnings=[w for r in results for w in r.warnings],
    )


# Factories producing the uniform Solver signature used by the refine loop
# and the evaluation harness.


def standard_solver(demos: DemoSet, max_tokens: int = DEFAULT_MAX_TOKENS) -> Solver:
    def _solve(problem, backend, temperature=0.0, sample_index=0):
        return solve_standard(problem, demos, backend, temperature, sample_index, max_tokens)

    return _solve


def cot_solver(demos: DemoSet, max_tokens: int = DEFAULT_MAX_TOKENS) -> Solver:
    def _solve(problem, backend, temperature=0.0, sample_index=0):
        return solve_cot(problem, demos, backend, temperature, sample_index, max_tokens)

    return _solve


def ltm_solver(
    reduce_demos: DemoSet,
    solve_demos: DemoSet,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    max_subproblems: int = 8,
) -> Solver:
    def _solve(problem, backend, temperature=0.0, sample_index=0):
        return solve_ltm(
            problem,
            reduce_demos,
            solve_demos,
            backend,
            temperature,
            sample_index,
            max_tokens,
            max_subproblems,
        )

    return _solve


def consistency_solver(inner: Solver, n_paths: int, temperature: float) -> Solver:
    """Wrap a solver so every solve call majority-votes over n_paths samples."""

    def _solve(problem, backend, temperature_unused=0.0, sample_index=0):
        return solve_with_consistency(inner, problem, backend, n_paths, temperature)

    return _solve
