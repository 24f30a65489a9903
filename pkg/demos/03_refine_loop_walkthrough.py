"""Walkthrough: the progressive refine loop on a scripted backend.

The fixture scripts a model that answers the original problem wrongly,
then settles once the problem has been rewritten twice; the loop stops on
answer convergence and prints the full V0..Vk / A0..Ak trajectory.

Run: python3 demos/03_refine_loop_walkthrough.py
"""

from selfpolish import (
    CanonicalAnswer,
    CompletionRequest,
    PolishConfig,
    Problem,
    ScriptedBackend,
    cache_key,
    load_demos,
    run,
)
from selfpolish.prompting import build_standard_prompt, build_zero_shot_refine_prompt
from selfpolish.solver import standard_solver

problem = Problem(
    id="demo-0",
    body="Noah keeps his marbles in a tin that once held butter cookies.",
    question="He has 3 bags with 8 marbles each and finds 4 more under the couch. "
    "How many marbles does Noah have?",
    options=None,
    gold=CanonicalAnswer.numeric("28"),
    dataset="gsm8k",
)

demos = load_demos("gsm8k", "standard", 4)

REWRITES = [
    "Noah has 3 bags with 8 marbles each and finds 4 more marbles. How many marbles does Noah have?",
    "Noah has 3 * 8 = 24 marbles in bags and 4 loose marbles. How many marbles does Noah have in total?",
]
ANSWERS = ["24", "28", "28"]  # wrong, then stable after the first rewrite


def key(prompt):
    return cache_key(CompletionRequest(prompt=prompt, model_id="scripted"))


entries = {}
version = problem
for i, answer in enumerate(ANSWERS):
    entries[key(build_standard_prompt(demos, version))] = f"The answer is {answer}."
    if i < len(REWRITES):
        entries[key(build_zero_shot_refine_prompt(version))] = f"New problem: {REWRITES[i]}"
        version = version.with_text(REWRITES[i])

backend = ScriptedBackend(entries=entries)
trajectory = run(problem, standard_solver(demos), backend, PolishConfig(max_refinements=3))

for i, (v, a) in enumerate(zip(trajectory.versions, trajectory.answers)):
    print(f"V{i}: {v}")
    print(f"A{i}: {a.text}\n")
print(f"stop reason : {trajectory.stop_reason}")
print(f"selected    : {trajectory.selected.text} (gold {problem.gold.text})")
print(f"model calls : {trajectory.calls_used} (backend counted {backend.calls})")
