"""Walkthrough: every prompt style rendered on one sample problem, using the
bundled demonstration assets.

Run: python3 demos/02_prompt_styles.py
"""

from selfpolish import CanonicalAnswer, Problem, load_demos
from selfpolish.prompting import (
    build_cot_prompt,
    build_incontext_refine_prompt,
    build_ltm_reduction_prompt,
    build_standard_prompt,
    build_zero_shot_refine_prompt,
)

problem = Problem(
    id="demo-0",
    body="A florist starts the day with 48 roses.",
    question="She sells 19 roses in the morning and 12 in the afternoon. How many roses are left?",
    options=None,
    gold=CanonicalAnswer.numeric("17"),
    dataset="gsm8k",
)


def show(title, prompt, head=2, tail=6):
    lines = prompt.splitlines()
    print(f"\n==== {title} ({len(lines)} lines) ====")
    for line in lines[:head]:
        print(line)
    if len(lines) > head + tail:
        print(f"... [{len(lines) - head - tail} lines omitted] ...")
    for line in lines[-tail:]:
        print(line)


show("standard, 2 shots", build_standard_prompt(load_demos("gsm8k", "standard", 2), problem))
show("chain-of-thought, 2 shots", build_cot_prompt(load_demos("gsm8k", "cot", 2), problem))
show("decomposition stage", build_ltm_reduction_prompt(load_demos("gsm8k", "ltm_reduce"), problem))
show("zero-shot rewrite", build_zero_shot_refine_prompt(problem), head=4)
show(
    "in-context rewrite, 3 pairs",
    build_incontext_refine_prompt(load_demos("gsm8k", "refine", 3), problem),
    head=4,
)
