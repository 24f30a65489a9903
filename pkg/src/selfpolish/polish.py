"""Progressive problem-refining controller.

Alternates refine and solve stages: solve the original problem, then
repeatedly rewrite the latest version and solve the rewrite, stopping as
soon as the last two answers agree or the iteration budget runs out. On
budget exhaustion a selection strategy (last / first / vote) picks the
final answer from the answers to the generated versions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import prompting
from .answers import CanonicalAnswer, answers_equal, majority_vote
from .backend import Backend, CompletionRequest, DEFAULT_MAX_TOKENS, cache_key
from .datasets import Problem
from .errors import NoGeneratedProblem
from .prompting import DemoSet
from .solver import Solver, consistency_solver

CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"

SELECT_LAST = "last"
SELECT_FIRST = "first"
SELECT_VOTE = "vote"
SELECTIONS = (SELECT_LAST, SELECT_FIRST, SELECT_VOTE)

ZERO_SHOT = "zero_shot"
IN_CONTEXT = "in_context"

SOLVE_ONLY = "solve_only"
FULL_PIPELINE = "full_pipeline"

_OPTIONS_CUE = "Answer Choices:"


@dataclass(frozen=True)
class ConsistencyConfig:
    """Self-consistency settings: sampled paths, their temperature, and
    whether sampling wraps each solve call or whole refine pipelines."""

    n_paths: int
    temperature: float = 0.7
    scope: str = FULL_PIPELINE

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.scope not in (SOLVE_ONLY, FULL_PIPELINE):
            raise ValueError(f"unknown sc scope {self.scope!r}")


@dataclass(frozen=True)
class PolishConfig:
    max_refinements: int = 3  # the iteration budget K
    refine_mode: str = ZERO_SHOT
    selection: str = SELECT_LAST
    convergence_includes_first_answer: bool = True
    refine_temperature: float = 0.0
    refine_instruction: str | None = None
    max_tokens: int = DEFAULT_MAX_TOKENS
    sc: ConsistencyConfig | None = None

    def __post_init__(self):
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")
        if self.refine_mode not in (ZERO_SHOT, IN_CONTEXT):
            raise ValueError(f"unknown refine mode {self.refine_mode!r}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection strategy {self.selection!r}")


@dataclass
class Trajectory:
    """Record of one refine loop: problem versions V0..Vk, answers A0..Ak,
    why it stopped, and the answer it settled on."""

    versions: list[str]
    answers: list[CanonicalAnswer]
    stop_reason: str
    selected: CanonicalAnswer
    calls_used: int
    digests: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    path_answers: list[CanonicalAnswer] | None = None  # full-pipeline SC vote

    @property
    def iterations(self) -> int:
        """Number of generated versions (k); total answers is k + 1."""
        return len(self.versions) - 1

    def to_dict(self) -> dict:
        out = {
            "versions": list(self.versions),
            "answers": [a.to_dict() for a in self.answers],
            "stop_reason": self.stop_reason,
            "selected": self.selected.to_dict(),
            "calls_used": self.calls_used,
            "digests": list(self.digests),
            "warnings": list(self.warnings),
        }
        if self.path_answers is not None:
            out["path_answers"] = [a.to_dict() for a in self.path_answers]
        return out

    @staticmethod
    def from_dict(d: dict) -> "Trajectory":
        return Trajectory(
            versions=list(d["versions"]),
            answers=[CanonicalAnswer.from_dict(a) for a in d["answers"]],
            stop_reason=d["stop_reason"],
            selected=CanonicalAnswer.from_dict(d["selected"]),
            calls_used=d["calls_used"],
            digests=list(d.get("digests", [])),
            warnings=list(d.get("warnings", [])),
            path_answers=(
                [CanonicalAnswer.from_dict(a) for a in d["path_answers"]]
                if d.get("path_answers") is not None
                else None
            ),
        )


@dataclass
class RefineOutcome:
    version: Problem
    digest: str
    warned: bool = False


def _strip_options_block(text: str) -> str:
    idx = text.find(_OPTIONS_CUE)
    return text[:idx].strip() if idx >= 0 else text


def refine(
    version: Problem,
    mode: str,
    backend: Backend,
    demos: DemoSet | None = None,
    temperature: float = 0.0,
    sample_index: int = 0,
    instruction: str | None = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> RefineOutcome:
    """Rewrite the given problem version once.

    Conditions only on the most recent version. An empty parse returns the
    input unchanged (flagged via `warned`). For choice tasks the option
    block is re-appended verbatim so rewriting can never alter the answer
    space.
    """
    if mode == IN_CONTEXT:
        if demos is None:
            raise ValueError("in-context refining requires refine demos")
        prompt = prompting.build_incontext_refine_prompt(demos, version, instruction)
    elif mode == ZERO_SHOT:
        prompt = prompting.build_zero_shot_refine_prompt(version, instruction)
    else:
        raise ValueError(f"unknown refine mode {mode!r}")
    request = CompletionRequest(
        prompt=prompt,
        temperature=temperature,
        max_tokens=max_tokens,
        sample_index=sample_index,
        model_id=getattr(backend, "model_id", "default"),
    )
    completion = backend.complete(request)
    digest = cache_key(request)
    text = prompting.parse_new_problem(completion.text)
    if version.options:
        text = _strip_options_block(text)
    if not text:
        return RefineOutcome(version=version, digest=digest, warned=True)
    return RefineOutcome(version=version.with_text(text), digest=digest)


def select_final(answers: Sequence[CanonicalAnswer], strategy: str) -> CanonicalAnswer:
    """Pick the final answer from A0..Ak when no convergence happened.

    last: answer to the last generated version. first: answer to the first
    generated version (A1, not A0). vote: majority over A1..Ak; A0 is
    excluded, and k=1 degenerates to A1.
    """
    if len(answers) < 2:
        raise NoGeneratedProblem("selection needs at least one generated version")
    if strategy == SELECT_LAST:
        return answers[-1]
    if strategy == SELECT_FIRST:
        return answers[1]
    if strategy == SELECT_VOTE:
        return majority_vote(list(answers[1:]))
    raise ValueError(f"unknown selection strategy {strategy!r}")


def _converged(answers: Sequence[CanonicalAnswer], i: int, include_first: bool) -> bool:
    if i < 1 or (not include_first and i < 2):
        return False
    return answers_equal(answers[i], answers[i - 1])


def _run_single(
    problem: Problem,
    solver: Solver,
    backend: Backend,
    config: PolishConfig,
    refine_demos: DemoSet | None,
    solve_temperature: float,
    refine_temperature: float,
    sample_index: int,
) -> Trajectory:
    versions = [problem]
    answers: list[CanonicalAnswer] = []
    digests: list[str] = []
    warnings: list[str] = []
    calls = 0

    def _partial(exc: Exception) -> Exception:
        # surfaced alongside the propagated error so callers can audit how
        # far the trajectory got
        exc.partial_trajectory = {
            "versions": [v.statement() for v in versions],
            "answers": [a.to_dict() for a in answers],
            "calls_used": calls,
            "digests": list(digests),
        }
        return exc

    try:
        result = solver(problem, backend, solve_temperature, sample_index)
    except Exception as exc:
        raise _partial(exc)
    answers.append(result.answer)
    calls += result.calls_used
    digests.extend(result.prompt_digests)
    warnings.extend(result.warnings)

    for i in range(1, config.max_refinements + 1):
        try:
            outcome = refine(
                versions[-1],
                config.refine_mode,
                backend,
                demos=refine_demos,
                temperature=refine_temperature,
                sample_index=sample_index,
                instruction=config.refine_instruction,
                max_tokens=config.max_tokens,
            )
        except Exception as exc:
            raise _partial(exc)
        calls += 1
        digests.append(outcome.digest)
        if outcome.warned:
            warnings.append(f"iteration {i}: empty rewrite, version kept unchanged")
        versions.append(outcome.version)

        try:
            result = solver(outcome.version, backend, solve_temperature, sample_index)
        except Exception as exc:
            raise _partial(exc)
        answers.append(result.answer)
        calls += result.calls_used
        digests.extend(result.prompt_digests)
        warnings.extend(result.warnings)

        if _converged(answers, i, config.convergence_includes_first_answer):
            return Trajectory(
                versions=[v.statement() for v in versions],
                answers=answers,
                stop_reason=CONVERGED,
                selected=answers[i],
                calls_used=calls,
                digests=digests,
                warnings=warnings,
            )

    return Trajectory(
        versions=[v.statement() for v in versions],
        answers=answers,
        stop_reason=BUDGET_EXHAUSTED,
        selected=select_final(answers, config.selection),
        calls_used=calls,
        digests=digests,
        warnings=warnings,
    )


def run(
    problem: Problem,
    solver: Solver,
    backend: Backend,
    config: PolishConfig,
    refine_demos: DemoSet | None = None,
) -> Trajectory:
    """Execute the refine loop for one problem and return its Trajectory.

    With sc.scope=full_pipeline the whole loop runs once per sampled path
    (solving and refining at the sampling temperature) and the returned
    trajectory is the path whose final answer wins the majority vote, with
    calls_used covering every path. With sc.scope=solve_only, each solve
    stage is individually wrapped in self-consistency and refining stays
    greedy.
    """
    if config.refine_mode == IN_CONTEXT and refine_demos is None:
        raise ValueError("in-context refining requires refine demos")

    sc = config.sc
    if sc is not None and sc.n_paths > 1 and sc.scope == FULL_PIPELINE:
        paths = [
            _run_single(
                problem,
                solver,
                backend,
                config,
                refine_demos,
                solve_temperature=sc.temperature,
                refine_temperature=sc.temperature,
                sample_index=p,
            )
            for p in range(sc.n_paths)
        ]
        finals = [t.selected for t in paths]
        winner = majority_vote(finals)
        chosen = next(t for t in paths if answers_equal(t.selected, winner))
        chosen.selected = winner
        chosen.calls_used = sum(t.calls_used for t in paths)
        chosen.digests = [d for t in paths for d in t.digests]
        chosen.path_answers = finals
        return chosen

    active_solver = solver
    if sc is not None and sc.n_paths > 1 and sc.scope == SOLVE_ONLY:
        active_solver = consistency_solver(solver, sc.n_paths, sc.temperature)

    return _run_single(
        problem,
        solver=active_solver,
        backend=backend,
        config=config,
        refine_demos=refine_demos,
        solve_temperature=0.0,
        refine_temperature=config.refine_temperature,
        sample_index=0,
    )
