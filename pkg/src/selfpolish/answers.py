"""Answer extraction, normalization, comparison and voting.

Numeric values are kept as exact decimals (`decimal.Decimal`), never binary
floats, so "5.0" and "5" compare equal and dataset golds like "27.675"
round-trip without artifacts. Everything here is pure and thread-safe.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import EmptyInput

NUMERIC = "numeric"
CHOICE = "choice"
UNPARSED = "unparsed"

# "answer is"/"answer:" in any casing, e.g. "The answer is 6." or "Answer: 6".
# The optional leading "the" makes rationale/answer splits land on the
# sentence boundary.
_MARKER_RE = re.compile(r"(?:\bthe\s+)?answer\s*(?:is|:)", re.IGNORECASE)

# One number token. Order matters: comma-grouped and decimal forms must win
# over the bare-integer fallback, and fractions over their numerator.
_NUMBER_RE = re.compile(
    r"""[-+]?(?:
        \d{1,3}(?:,\d{3})+(?:\.\d+)?   # 1,200 or 1,200.00
      | \d+\.\d+                       # 3.75
      | \.\d+                          # .5
      | \d+\s*/\s*\d+                  # 3/4
      | \d+                            # 42
    )""",
    re.VERBOSE,
)

# Standalone option letter, optionally parenthesized: "C", "(c)", "(C)."
_CHOICE_RE = re.compile(r"(?<![A-Za-z0-9])\(?([A-Ea-e])\)?(?![A-Za-z0-9])")


@dataclass(frozen=True)
class CanonicalAnswer:
    """Normalized answer value plus the raw text it came from."""

    kind: str
    numeric_value: Decimal | None = None
    choice_letter: str | None = None
    raw_span: str = ""

    @staticmethod
    def numeric(value: Decimal | int | str, raw_span: str = "") -> "CanonicalAnswer":
        dec = value if isinstance(value, Decimal) else Decimal(str(value))
        return CanonicalAnswer(NUMERIC, numeric_value=dec, raw_span=raw_span or str(value))

    @staticmethod
    def choice(letter: str, raw_span: str = "") -> "CanonicalAnswer":
        return CanonicalAnswer(CHOICE, choice_letter=letter.upper(), raw_span=raw_span or letter)

    @staticmethod
    def unparsed(text: str) -> "CanonicalAnswer":
        return CanonicalAnswer(UNPARSED, raw_span=text)

    @property
    def text(self) -> str:
        """Canonical rendering, suitable for re-extraction and reports."""
        if self.kind == NUMERIC:
            return format_decimal(self.numeric_value)
        if self.kind == CHOICE:
            return self.choice_letter
        return self.raw_span

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "raw": self.raw_span}
        if self.kind == NUMERIC:
            out["value"] = format_decimal(self.numeric_value)
        elif self.kind == CHOICE:
            out["value"] = self.choice_letter
        return out

    @staticmethod
    def from_dict(d: dict) -> "CanonicalAnswer":
        kind = d["kind"]
        if kind == NUMERIC:
            return CanonicalAnswer.numeric(Decimal(d["value"]), d.get("raw", ""))
        if kind == CHOICE:
            return CanonicalAnswer.choice(d["value"], d.get("raw", ""))
        return CanonicalAnswer.unparsed(d.get("raw", ""))


def format_decimal(d: Decimal) -> str:
    """Render without exponent or trailing zeros: 1200.00 -> "1200"."""
    if d == 0:
        return "0"
    d = d.normalize()
    if d.as_tuple().exponent > 0:
        d = d.quantize(Decimal(1))
    return format(d, "f")


def _fraction_to_decimal(num: int, den: int) -> Decimal | None:
    """Exact decimal for a terminating fraction, else None (1/3 does not terminate)."""
    if den == 0:
        return None
    frac = Fraction(num, den)
    d = frac.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return None
    k = max(twos, fives)
    scaled = frac.numerator * 10**k // frac.denominator
    return Decimal(scaled).scaleb(-k)


def parse_number_token(token: str) -> Decimal | None:
    """Parse one matched number token; commas stripped, fractions made exact."""
    token = token.replace(" ", "")
    if "/" in token:
        num_s, den_s = token.split("/", 1)
        try:
            return _fraction_to_decimal(int(num_s), int(den_s))
        except ValueError:
            return None
    try:
        return Decimal(token.replace(",", ""))
    except InvalidOperation:
        return None


def _first_number(text: str) -> CanonicalAnswer | None:
    for m in _NUMBER_RE.finditer(text):
        value = parse_number_token(m.group(0))
        if value is not None:
            span = m.group(0)
            if text[m.end() : m.end() + 1] == "%":
                span += "%"  # percent sign dropped, value kept as written
            return CanonicalAnswer.numeric(value, span)
    return None


def _last_number(text: str) -> CanonicalAnswer | None:
    best = None
    for m in _NUMBER_RE.finditer(text):
        value = parse_number_token(m.group(0))
        if value is not None:
            span = m.group(0)
            if text[m.end() : m.end() + 1] == "%":
                span += "%"
            best = CanonicalAnswer.numeric(value, span)
    return best


def extract_answer(text: str, task: str) -> CanonicalAnswer:
    """Pull a canonical answer out of raw model text.

    Numeric task: first number after the last answer marker, else the last
    number anywhere. Choice task: last standalone letter A-E after the last
    marker, else anywhere. Currency symbols, thousands separators, trailing
    punctuation and a trailing percent sign are stripped. When nothing
    matches the result is kind=unparsed (a value, not an error).
    """
    if task not in (NUMERIC, CHOICE):
        raise ValueError(f"unknown task kind: {task!r}")
    markers = list(_MARKER_RE.finditer(text))
    region = text[markers[-1].end() :] if markers else text

    if task == NUMERIC:
        found = _first_number(region) if markers else _last_number(region)
        if found is None and markers:
            found = _last_number(text)
        return found if found is not None else CanonicalAnswer.unparsed(text.strip())

    matches = list(_CHOICE_RE.finditer(region))
    if not matches and markers:
        matches = list(_CHOICE_RE.finditer(text))
    if matches:
        m = matches[-1]
        return CanonicalAnswer.choice(m.group(1), m.group(0))
    return CanonicalAnswer.unparsed(text.strip())


def answers_equal(a: CanonicalAnswer, b: CanonicalAnswer) -> bool:
    """Equivalence used for convergence, voting and grading.

    Numeric compares exact decimals (trailing zeros irrelevant), choice
    compares letters, unparsed compares raw text; cross-kind is never equal.
    """
    if a.kind != b.kind:
        return False
    if a.kind == NUMERIC:
        return a.numeric_value == b.numeric_value
    if a.kind == CHOICE:
        return a.choice_letter == b.choice_letter
    return a.raw_span == b.raw_span


def majority_vote(answers: Sequence[CanonicalAnswer]) -> CanonicalAnswer:
    """Most frequent equivalence class; ties go to the earliest first occurrence."""
    if not answers:
        raise EmptyInput("majority_vote over an empty list")
    reps: list[list] = []  # [representative, count, first_index]
    for idx, ans in enumerate(answers):
        for rep in reps:
            if answers_equal(rep[0], ans):
                rep[1] += 1
                break
        else:
            reps.append([ans, 1, idx])
    best = max(reps, key=lambda rep: (rep[1], -rep[2]))
    return best[0]


def vote_counts(answers: Iterable[CanonicalAnswer]) -> list[tuple[CanonicalAnswer, int]]:
    """Class representatives with counts, in first-occurrence order."""
    reps: list[list] = []
    for ans in answers:
        for rep in reps:
            if answers_equal(rep[0], ans):
                rep[1] += 1
                break
        else:
            reps.append([ans, 1])
    return [(rep[0], rep[1]) for rep in reps]


def find_last_marker(text: str) -> tuple[int, int] | None:
    """Span of the last answer marker, used to split a rationale from its answer."""
    markers = list(_MARKER_RE.finditer(text))
    if not markers:
        return None
    m = markers[-1]
    return m.start(), m.end()
