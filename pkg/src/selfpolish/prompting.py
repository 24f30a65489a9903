"""Deterministic prompt construction for every supported style, plus
demonstration-set manipulation for the sensitivity sweeps.

Template strings are fixed byte-for-byte: equal inputs always render equal
prompts, which is what makes fixtures and cache digests stable. Builders
never truncate or rewrite the test problem.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from itertools import permutations
from pathlib import Path

from .datasets import Problem
from .errors import PoolTooSmall, StyleMismatch
from .rng import SeededRng

STANDARD = "standard"
COT = "cot"
LTM_REDUCE = "ltm_reduce"
LTM_SOLVE = "ltm_solve"
REFINE = "refine"

STYLES = (STANDARD, COT, LTM_REDUCE, LTM_SOLVE, REFINE)

NEW_PROBLEM_CUE = "New problem:"

DEFAULT_REFINE_INSTRUCTION = (
    "Rewrite a new version of the following math problem, including both the "
    "context and the final question, so that it is easier to understand and "
    "answer. Never omit any useful information."
)


@dataclass(frozen=True)
class Demo:
    """One in-context demonstration; fields beyond the style stay unset."""

    style: str
    original_problem: str
    answer: str = ""
    rationale: str = ""
    subproblems: tuple[str, ...] = ()
    subproblem_answers: tuple[tuple[str, str], ...] = ()
    new_problem: str = ""

    def __post_init__(self):
        if self.style not in STYLES:
            raise StyleMismatch(f"unknown demo style {self.style!r}")
        if not self.original_problem:
            raise StyleMismatch("demo is missing its problem text")
        required = {
            STANDARD: self.answer,
            COT: self.rationale and self.answer,
            LTM_REDUCE: self.subproblems,
            LTM_SOLVE: self.subproblem_answers,
            REFINE: self.new_problem,
        }[self.style]
        if not required:
            raise StyleMismatch(f"demo of style {self.style!r} is missing required fields")


@dataclass(frozen=True)
class DemoSet:
    """Ordered demonstrations of one style; (set_id, order_id) pin the bytes."""

    demos: tuple[Demo, ...]
    set_id: str = "s0"
    order_id: str = "o0"

    def __post_init__(self):
        if not self.demos:
            raise StyleMismatch("a DemoSet needs at least one demo")
        styles = {d.style for d in self.demos}
        if len(styles) > 1:
            raise StyleMismatch(f"mixed demo styles in one set: {sorted(styles)}")

    @property
    def style(self) -> str:
        return self.demos[0].style

    @property
    def k(self) -> int:
        return len(self.demos)

    def take(self, k: int) -> "DemoSet":
        if k < 1 or k > len(self.demos):
            raise StyleMismatch(f"cannot take {k} demos from a set of {len(self.demos)}")
        return DemoSet(self.demos[:k], set_id=self.set_id, order_id=self.order_id)


def _require_style(demos: DemoSet, style: str) -> None:
    if demos.style != style:
        raise StyleMismatch(f"expected {style!r} demos, got {demos.style!r}")


def build_standard_prompt(demos: DemoSet, problem: Problem) -> str:
    _require_style(demos, STANDARD)
    parts = [f"Q: {d.original_problem}\nA: The answer is {d.answer}.\n\n" for d in demos.demos]
    parts.append(f"Q: {problem.statement()}\nA:")
    return "".join(parts)


def build_cot_prompt(demos: DemoSet, problem: Problem) -> str:
    _require_style(demos, COT)
    parts = [
        f"Q: {d.original_problem}\nA: {d.rationale} The answer is {d.answer}.\n\n"
        for d in demos.demos
    ]
    parts.append(f"Q: {problem.statement()}\nA:")
    return "".join(parts)


def build_ltm_reduction_prompt(demos: DemoSet, problem: Problem) -> str:
    _require_style(demos, LTM_REDUCE)
    parts = []
    for d in demos.demos:
        items = " ".join(f"{i}. {s}" for i, s in enumerate(d.subproblems, 1))
        parts.append(f"Q: {d.original_problem}\nA: To solve this problem, we need to: {items}\n\n")
    parts.append(f"Q: {problem.statement()}\nA:")
    return "".join(parts)


# Enumerators like "1. ", "2) " at line start or after whitespace.
_ENUM_RE = re.compile(r"(?:^|(?<=\s))\d{1,2}\s*[.)]\s+")


def parse_subproblems(reply: str, fallback_question: str) -> list[str]:
    """Extract enumerated subproblems from a reduction reply.

    Falls back to the final question itself when no enumeration is found,
    so the solve stage always has at least one step.
    """
    marks = list(_ENUM_RE.finditer(reply))
    items = []
    for i, m in enumerate(marks):
        end = marks[i + 1].start() if i + 1 < len(marks) else len(reply)
        text = reply[m.end() : end].strip()
        if text:
            items.append(text)
    return items if items else [fallback_question]


def build_ltm_solve_prompt(
    demos: DemoSet,
    problem: Problem,
    qa_so_far: list[tuple[str, str]],
    current: str,
) -> str:
    _require_style(demos, LTM_SOLVE)
    parts = []
    for d in demos.demos:
        block = [d.original_problem, ""]
        for sub_q, sub_a in d.subproblem_answers:
            block.append(f"Q: {sub_q}")
            block.append(f"A: {sub_a}")
        parts.append("\n".join(block) + "\n\n")
    block = [problem.statement(), ""]
    for sub_q, sub_a in qa_so_far:
        block.append(f"Q: {sub_q}")
        block.append(f"A: {sub_a}")
    block.append(f"Q: {current}")
    block.append("A:")
    parts.append("\n".join(block))
    return "".join(parts)


def build_zero_shot_refine_prompt(problem: Problem, instruction: str | None = None) -> str:
    instruction = instruction or DEFAULT_REFINE_INSTRUCTION
    return f"{instruction}\n\nOriginal problem: {problem.statement()}\n{NEW_PROBLEM_CUE}"


def build_incontext_refine_prompt(
    demos: DemoSet, problem: Problem, instruction: str | None = None
) -> str:
    _require_style(demos, REFINE)
    instruction = instruction or DEFAULT_REFINE_INSTRUCTION
    parts = [f"{instruction}\n\n"]
    for d in demos.demos:
        parts.append(f"Original problem: {d.original_problem}\n{NEW_PROBLEM_CUE} {d.new_problem}\n\n")
    parts.append(f"Original problem: {problem.statement()}\n{NEW_PROBLEM_CUE}")
    return "".join(parts)


def parse_new_problem(reply: str) -> str:
    """Text after the last "New problem:" cue, else the whole reply, trimmed."""
    idx = reply.rfind(NEW_PROBLEM_CUE)
    text = reply[idx + len(NEW_PROBLEM_CUE) :] if idx >= 0 else reply
    return text.strip()


def demo_variants(
    pool: list[Demo],
    k: int,
    n_sets: int,
    n_orders: int,
    seed: int,
) -> list[DemoSet]:
    """Seeded subsets and orderings of a demo pool for sensitivity sweeps.

    Produces n_sets subsets of size k; each subset appears in n_orders
    distinct permutations (all k! of them when k! < n_orders). Output is
    reproducible for a fixed seed on any platform.
    """
    if k < 1 or n_sets < 1 or n_orders < 1:
        raise ValueError("k, n_sets and n_orders must all be >= 1")
    if len(pool) < k:
        raise PoolTooSmall(f"pool has {len(pool)} demos, need at least {k}")
    rng = SeededRng(seed)
    out = []
    for s in range(n_sets):
        subset = tuple(rng.sample(pool, k))
        total = math.factorial(k)
        if total <= n_orders:
            orders = [tuple(p) for p in permutations(range(k))]
        else:
            seen = set()
            orders = []
            while len(orders) < n_orders:
                perm = list(range(k))
                rng.shuffle(perm)
                key = tuple(perm)
                if key not in seen:
                    seen.add(key)
                    orders.append(key)
        for o, perm in enumerate(orders):
            demos = tuple(subset[j] for j in perm)
            out.append(DemoSet(demos, set_id=f"s{s}", order_id=f"o{o}"))
    return out


# ---------------------------------------------------------------------------
# Demo asset files


_FIELD_MAP = {
    "problem": "original_problem",
    "answer": "answer",
    "rationale": "rationale",
    "subproblems": "subproblems",
    "steps": "subproblem_answers",
    "new_problem": "new_problem",
}

# Datasets without their own prompt files reuse a same-shaped dataset's demos.
ASSET_ALIASES = {
    "svamp": "gsm8k",
    "multiarith": "gsm8k",
    "gsmic_2step": "gsm8k",
    "gsmic_mstep": "gsm8k",
    "mathqa": "aqua",
}


def load_demo_file(path: str | Path) -> list[Demo]:
    """Read one demo asset file (see assets/README.md for the schema)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    style = payload["style"]
    demos = []
    for item in payload["demos"]:
        kwargs = {"style": style}
        for key, attr in _FIELD_MAP.items():
            if key in item:
                value = item[key]
                if attr == "subproblems":
                    value = tuple(value)
                elif attr == "subproblem_answers":
                    value = tuple((q, a) for q, a in value)
                kwargs[attr] = value
        demos.append(Demo(**kwargs))
    return demos


def _asset_path(dataset: str, style: str) -> Path:
    name = f"{dataset}_{style}.json"
    base = resources.files("selfpolish").joinpath("assets")
    candidate = Path(str(base.joinpath(name)))
    if not candidate.exists():
        alias = ASSET_ALIASES.get(dataset)
        if alias:
            candidate = Path(str(base.joinpath(f"{alias}_{style}.json")))
    if not candidate.exists():
        raise FileNotFoundError(f"no demo asset for dataset={dataset!r} style={style!r}")
    return candidate


def load_demos(dataset: str, style: str, k: int | None = None) -> DemoSet:
    """Bundled demos for a dataset and style, optionally truncated to k shots."""
    demos = load_demo_file(_asset_path(dataset, style))
    ds = DemoSet(tuple(demos))
    return ds.take(k) if k is not None else ds
