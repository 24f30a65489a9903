"""Shared fixtures: problem factories, scripted-pipeline fixture builders,
and a stub solver for driving the refine loop with predetermined answers."""

from __future__ import annotations

from pathlib import Path

import pytest

from selfpolish.answers import CanonicalAnswer
from selfpolish.backend import CompletionRequest, ScriptedBackend, cache_key
from selfpolish.datasets import Problem
from selfpolish.prompting import (
    Demo,
    DemoSet,
    build_standard_prompt,
    build_zero_shot_refine_prompt,
)
from selfpolish.solver import SolveResult

TESTDATA = Path(__file__).parent / "data"


def make_problem(
    question: str = "What is 2 + 2?",
    gold: str = "4",
    body: str = "",
    options: tuple[tuple[str, str], ...] | None = None,
    pid: str = "test-0000",
    dataset: str = "gsm8k",
) -> Problem:
    if options:
        answer = CanonicalAnswer.choice(gold)
    else:
        answer = CanonicalAnswer.numeric(gold)
    return Problem(
        id=pid,
        body=body,
        question=question,
        options=options,
        gold=answer,
        dataset=dataset,
    )


def standard_demos() -> DemoSet:
    return DemoSet(
        (
            Demo(style="standard", original_problem="P1", answer="6"),
            Demo(style="standard", original_problem="P2", answer="11"),
        )
    )


def entry_key(
    prompt: str,
    temperature: float = 0.0,
    sample_index: int = 0,
    max_tokens: int = 512,
    model_id: str = "scripted",
) -> str:
    return cache_key(
        CompletionRequest(
            prompt=prompt,
            temperature=temperature,
            max_tokens=max_tokens,
            sample_index=sample_index,
            model_id=model_id,
        )
    )


def script_standard_sp(
    problem: Problem,
    demos: DemoSet,
    k: int,
    answers: list[str],
    entries: dict[str, str] | None = None,
    refine_texts: list[str] | None = None,
    prompt_builder=build_standard_prompt,
    refine_builder=None,
) -> dict[str, str]:
    """Digest-fixture entries for one problem's full refine loop.

    `answers` holds the scripted reply value per version (length k + 1).
    Entries for iterations the controller never reaches are simply unused.
    `refine_builder` defaults to the zero-shot refine prompt.
    """
    entries = entries if entries is not None else {}
    refine_builder = refine_builder or build_zero_shot_refine_prompt
    version = problem
    for i in range(k + 1):
        entries[entry_key(prompt_builder(demos, version))] = f"The answer is {answers[i]}."
        if i < k:
            core = (
                refine_texts[i]
                if refine_texts is not None
                else f"{problem.question} (rewrite {i + 1} of {problem.id})"
            )
            entries[entry_key(refine_builder(version))] = f"New problem: {core}"
            version = version.with_text(core)
    return entries


def write_fixture_file(entries: dict[str, str], path, model_id: str = "scripted") -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for key, text in entries.items():
            fh.write(
                json.dumps(
                    {"key": key, "model_id": model_id, "response_text": text, "created_at": "t"}
                )
                + "\n"
            )


class StubSolver:
    """Returns a predetermined answer per call, in call order."""

    def __init__(self, answers: list[CanonicalAnswer]):
        self.answers = list(answers)
        self.calls = 0

    def __call__(self, problem, backend, temperature=0.0, sample_index=0):
        answer = self.answers[self.calls % len(self.answers)]
        self.calls += 1
        return SolveResult(answer=answer, calls_used=1, prompt_digests=[f"stub-{self.calls}"])


def numeric(value) -> CanonicalAnswer:
    return CanonicalAnswer.numeric(str(value))


def refine_queue_backend(k: int = 3) -> ScriptedBackend:
    """Queue backend feeding `k` rewrite replies for a single trajectory."""
    return ScriptedBackend(
        queue=[("*", f"New problem: rewritten version {i + 1}") for i in range(k)]
    )


@pytest.fixture
def tiny_problem():
    return make_problem()
