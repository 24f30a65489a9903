"""Loaders for the math-reasoning benchmarks, normalized into one Problem
type, plus seeded sampling with restarts.

Each loader consumes the dataset's published file format. Gold answers are
normalized through the answers module so grading never touches raw strings.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Sequence

from .answers import CanonicalAnswer, parse_number_token, _NUMBER_RE
from .errors import NotEnoughProblems, SchemaError
from .rng import SeededRng

GSM8K = "gsm8k"
AQUA = "aqua"
SVAMP = "svamp"
MULTIARITH = "multiarith"
MATHQA = "mathqa"
GSMIC_2STEP = "gsmic_2step"
GSMIC_MSTEP = "gsmic_mstep"

DATASETS = (GSM8K, AQUA, SVAMP, MULTIARITH, MATHQA, GSMIC_2STEP, GSMIC_MSTEP)

CHOICE_LETTERS = "ABCDE"


@dataclass(frozen=True)
class Problem:
    """One reasoning item: context plus final question, optional options."""

    id: str
    body: str
    question: str
    options: tuple[tuple[str, str], ...] | None
    gold: CanonicalAnswer
    dataset: str
    requires_steps: int | None = None

    @property
    def text(self) -> str:
        return f"{self.body} {self.question}" if self.body else self.question

    @property
    def task(self) -> str:
        return "choice" if self.options else "numeric"

    def statement(self) -> str:
        """Full problem text as shown to the model, option block included."""
        if not self.options:
            return self.text
        opts = " ".join(f"({letter}) {text}" for letter, text in self.options)
        return f"{self.text}\nAnswer Choices: {opts}"

    def with_text(self, core_text: str) -> "Problem":
        """A rewritten version of this problem; options and gold unchanged."""
        return replace(self, body="", question=core_text)


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh, parse_float=Decimal)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc


def _read_jsonl(path: str):
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line, parse_float=Decimal))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not valid JSON: {exc}", record_index=i) from exc
    return records


def _require(record: dict, field_name: str, index: int):
    if field_name not in record or record[field_name] in (None, ""):
        raise SchemaError(f"missing field {field_name!r}", record_index=index)
    return record[field_name]


def _gold_number(text_or_number, index: int) -> CanonicalAnswer:
    if isinstance(text_or_number, Decimal):
        return CanonicalAnswer.numeric(text_or_number)
    if isinstance(text_or_number, (int,)):
        return CanonicalAnswer.numeric(Decimal(text_or_number))
    m = _NUMBER_RE.search(str(text_or_number))
    if m:
        value = parse_number_token(m.group(0))
        if value is not None:
            return CanonicalAnswer.numeric(value, m.group(0))
    raise SchemaError(f"gold answer {text_or_number!r} is not numeric", record_index=index)


_GSM8K_GOLD_RE = re.compile(r"####\s*(.+)")


def _load_gsm8k(records, dataset: str) -> list[Problem]:
    problems = []
    for i, rec in enumerate(records):
        question = _require(rec, "question", i)
        answer_text = _require(rec, "answer", i)
        matches = _GSM8K_GOLD_RE.findall(answer_text)
        if not matches:
            raise SchemaError('missing "#### " gold marker in answer', record_index=i)
        gold = _gold_number(matches[-1].strip(), i)
        problems.append(
            Problem(
                id=f"{dataset}-{i:04d}",
                body="",
                question=question.strip(),
                options=None,
                gold=gold,
                dataset=dataset,
            )
        )
    return problems


_OPTION_PREFIX_RE = re.compile(r"^\(?([A-Ea-e])\)?\s*[).:]?\s*")


def _load_aqua(records, dataset: str) -> list[Problem]:
    problems = []
    for i, rec in enumerate(records):
        question = _require(rec, "question", i)
        raw_options = _require(rec, "options", i)
        correct = str(_require(rec, "correct", i)).strip().upper()
        if correct not in CHOICE_LETTERS:
            raise SchemaError(f"correct letter {correct!r} not in A-E", record_index=i)
        options = []
        for j, opt in enumerate(raw_options):
            m = _OPTION_PREFIX_RE.match(opt.strip())
            letter = m.group(1).upper() if m else CHOICE_LETTERS[j]
            text = opt.strip()[m.end() :].strip() if m else opt.strip()
            options.append((letter, text))
        problems.append(
            Problem(
                id=f"{dataset}-{i:04d}",
                body="",
                question=question.strip(),
                options=tuple(options),
                gold=CanonicalAnswer.choice(correct),
                dataset=dataset,
            )
        )
    return problems


def _load_svamp(records, dataset: str) -> list[Problem]:
    problems = []
    for i, rec in enumerate(records):
        body = _require(rec, "Body", i)
        question = _require(rec, "Question", i)
        gold = _gold_number(_require(rec, "Answer", i), i)
        problems.append(
            Problem(
                id=f"{dataset}-{i:04d}",
                body=body.strip(),
                question=question.strip(),
                options=None,
                gold=gold,
                dataset=dataset,
            )
        )
    return problems


def _load_multiarith(records, dataset: str) -> list[Problem]:
    problems = []
    for i, rec in enumerate(records):
        question = _require(rec, "sQuestion", i)
        solutions = _require(rec, "lSolutions", i)
        if not isinstance(solutions, list) or not solutions:
            raise SchemaError("lSolutions must be a non-empty list", record_index=i)
        gold = _gold_number(solutions[0], i)
        problems.append(
            Problem(
                id=f"{dataset}-{i:04d}",
                body="",
                question=question.strip(),
                options=None,
                gold=gold,
                dataset=dataset,
            )
        )
    return problems


# "a ) 38 , b ) 27.675 , c ) 30 , d ) 28 , e ) none of these"
_MATHQA_OPTION_RE = re.compile(r"([a-e])\s*\)\s*")


def _parse_mathqa_options(options_str: str, index: int) -> tuple[tuple[str, str], ...]:
    matches = list(_MATHQA_OPTION_RE.finditer(options_str))
    if not matches:
        raise SchemaError(f"cannot parse options string {options_str!r}", record_index=index)
    options = []
    for j, m in enumerate(matches):
        end = matches[j + 1].start() if j + 1 < len(matches) else len(options_str)
        text = options_str[m.end() : end].strip().rstrip(",").strip()
        options.append((m.group(1).upper(), text))
    return tuple(options)


def _load_mathqa(records, dataset: str) -> list[Problem]:
    problems = []
    for i, rec in enumerate(records):
        question = _require(rec, "Problem", i)
        options = _parse_mathqa_options(str(_require(rec, "options", i)), i)
        correct = str(_require(rec, "correct", i)).strip().upper()
        if correct not in CHOICE_LETTERS:
            raise SchemaError(f"correct letter {correct!r} not in a-e", record_index=i)
        problems.append(
            Problem(
                id=f"{dataset}-{i:04d}",
                body="",
                question=question.strip(),
                options=options,
                gold=CanonicalAnswer.choice(correct),
                dataset=dataset,
            )
        )
    return problems


def _load_gsmic(records, dataset: str) -> list[Problem]:
    problems = []
    for i, rec in enumerate(records):
        question = rec.get("new_question") or rec.get("question")
        if not question:
            raise SchemaError("missing perturbed question field", record_index=i)
        gold = _gold_number(_require(rec, "answer", i), i)
        steps = rec.get("n_steps")
        problems.append(
            Problem(
                id=f"{dataset}-{i:04d}",
                body="",
                question=str(question).strip(),
                options=None,
                gold=gold,
                dataset=dataset,
                requires_steps=int(steps) if steps is not None else None,
            )
        )
    return problems


_LOADERS = {
    GSM8K: (_read_jsonl, _load_gsm8k),
    AQUA: (_read_jsonl, _load_aqua),
    SVAMP: (_read_json, _load_svamp),
    MULTIARITH: (_read_json, _load_multiarith),
    MATHQA: (_read_json, _load_mathqa),
    GSMIC_2STEP: (_read_json, _load_gsmic),
    GSMIC_MSTEP: (_read_json, _load_gsmic),
}


def load(dataset: str, path: str) -> list[Problem]:
    """Load a dataset file in its published format into Problems."""
    if dataset not in _LOADERS:
        raise ValueError(f"unknown dataset {dataset!r}; expected one of {DATASETS}")
    reader, builder = _LOADERS[dataset]
    records = reader(path)
    if not isinstance(records, list):
        raise SchemaError("top-level structure must be a list of records")
    return builder(records, dataset)


def sample(
    problems: Sequence[Problem],
    n: int | str,
    seed: int,
    restarts: int = 1,
) -> list[tuple[int, list[Problem]]]:
    """Seeded sampling without replacement, one split per restart.

    Selection is keyed by sorted problem id, so shuffling the source file
    does not change which ids a seed picks. n="all" passes the problems
    through unsampled (every restart sees the same list).
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if n in ("all", None):
        return [(r, list(problems)) for r in range(restarts)]
    n = int(n)
    if n > len(problems):
        raise NotEnoughProblems(f"requested {n} problems but only {len(problems)} available")
    ordered = sorted(problems, key=lambda p: p.id)
    out = []
    for r in range(restarts):
        rng = SeededRng(seed + r)
        out.append((r, rng.sample(ordered, n)))
    return out
