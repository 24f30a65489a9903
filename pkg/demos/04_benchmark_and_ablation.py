"""Walkthrough: a scripted benchmark run, its report, and the
iteration-budget ablation over a shared response cache.

Run: python3 demos/04_benchmark_and_ablation.py
"""

from selfpolish import (
    CachingBackend,
    CanonicalAnswer,
    CompletionRequest,
    PolishConfig,
    Problem,
    RunConfig,
    ScriptedBackend,
    cache_key,
    load_demos,
    render_report,
    run_benchmark,
)
from selfpolish.evaluation import ablation_iterations
from selfpolish.prompting import build_standard_prompt, build_zero_shot_refine_prompt

demos = load_demos("gsm8k", "standard", 4)

# Each problem scripts the answer the model gives to every problem version.
PLAN = {
    "demo-0": ("4", ["4", "4", "4", "4"]),
    "demo-1": ("9", ["2", "9", "9", "9"]),
    "demo-2": ("6", ["1", "2", "6", "6"]),
    "demo-3": ("8", ["1", "2", "3", "4"]),
    "demo-4": ("5", ["7", "3", "5", "5"]),
    "demo-5": ("3", ["3", "1", "2", "4"]),
}


def key(prompt):
    return cache_key(CompletionRequest(prompt=prompt, model_id="scripted"))


problems = []
entries = {}
for pid, (gold, answers) in PLAN.items():
    problem = Problem(
        id=pid,
        body="",
        question=f"Scripted question {pid}?",
        options=None,
        gold=CanonicalAnswer.numeric(gold),
        dataset="gsm8k",
    )
    problems.append(problem)
    version = problem
    for i, answer in enumerate(answers):
        entries[key(build_standard_prompt(demos, version))] = f"The answer is {answer}."
        if i < len(answers) - 1:
            rewritten = f"Scripted question {pid}, rewrite {i + 1}?"
            entries[key(build_zero_shot_refine_prompt(version))] = f"New problem: {rewritten}"
            version = version.with_text(rewritten)

config = RunConfig(
    dataset="gsm8k",
    method="standard",
    self_polish=True,
    polish=PolishConfig(max_refinements=3),
    n="all",
    restarts=1,
    seed=0,
    parallelism=2,
)

inner = ScriptedBackend(entries=entries)
backend = CachingBackend(inner)

report = run_benchmark(config, backend=backend, problems=problems, solve_demos=demos)
print(render_report(report, "table_text").decode())

print("== ablation over the iteration budget (shared cache) ==")
rows = ablation_iterations(config, [1, 2, 3], backend=backend, problems=problems, solve_demos=demos)
for row in rows:
    shares = " ".join(f"{name}={value:.3f}" for name, value in row["strategy_share"].items())
    print(
        f"K={row['k']}  accuracy={row['mean_accuracy']:.3f}"
        f"  converged={row['converged_count']}  exhausted={row['exhausted_count']}  {shares}"
    )
print(f"\nscripted-backend calls behind the cache: {inner.calls}"
      f" (cache absorbed {backend.calls - inner.calls} repeats)")
