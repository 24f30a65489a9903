import random
from decimal import Decimal

import pytest

from selfpolish.answers import (
    CanonicalAnswer,
    answers_equal,
    extract_answer,
    format_decimal,
    majority_vote,
    parse_number_token,
)
from selfpolish.errors import EmptyInput


class TestExtractNumeric:
    def test_marker_with_currency_and_separators(self):
        got = extract_answer("... So she has $1,200.00 left. The answer is $1,200.00.", "numeric")
        assert got.kind == "numeric"
        assert got.numeric_value == Decimal("1200")

    def test_no_marker_takes_last_number(self):
        got = extract_answer("First 3, then 7, finally 12", "numeric")
        assert got.numeric_value == Decimal("12")

    def test_marker_takes_first_number_after_it(self):
        got = extract_answer("We add 3 and 4. The answer is 7 because 3 + 4.", "numeric")
        assert got.numeric_value == Decimal("7")

    def test_last_marker_wins(self):
        got = extract_answer("The answer is 5. Wait, the answer is 9.", "numeric")
        assert got.numeric_value == Decimal("9")

    def test_percent_dropped_value_kept(self):
        got = extract_answer("The answer is 20%.", "numeric")
        assert got.numeric_value == Decimal("20")

    def test_terminating_fraction(self):
        got = extract_answer("The answer is 3/4.", "numeric")
        assert got.numeric_value == Decimal("0.75")

    def test_non_terminating_fraction_unparsed(self):
        got = extract_answer("The answer is 1/3.", "numeric")
        assert got.kind == "unparsed"

    def test_nothing_matches(self):
        got = extract_answer("I cannot determine this.", "numeric")
        assert got.kind == "unparsed"

    def test_negative(self):
        got = extract_answer("The answer is -42.", "numeric")
        assert got.numeric_value == Decimal("-42")

    def test_marker_without_number_falls_back(self):
        got = extract_answer("We found 8 apples. The answer is unknown.", "numeric")
        assert got.numeric_value == Decimal("8")


class TestExtractChoice:
    def test_parenthesized_after_marker(self):
        got = extract_answer("Therefore the answer is (C).", "choice")
        assert got.kind == "choice"
        assert got.choice_letter == "C"

    def test_lowercase_normalized(self):
        got = extract_answer("the answer is (c)", "choice")
        assert got.choice_letter == "C"

    def test_bare_letter_no_marker(self):
        got = extract_answer("(B)", "choice")
        assert got.choice_letter == "B"

    def test_letter_inside_word_ignored(self):
        got = extract_answer("Not sure of it.", "choice")
        assert got.kind == "unparsed"

    def test_last_standalone_letter(self):
        got = extract_answer("Could be A or maybe D", "choice")
        assert got.choice_letter == "D"


class TestEquality:
    def test_trailing_zeros(self):
        assert answers_equal(CanonicalAnswer.numeric("5.0"), CanonicalAnswer.numeric("5"))

    def test_choice_case(self):
        assert answers_equal(CanonicalAnswer.choice("c"), CanonicalAnswer.choice("C"))

    def test_cross_kind(self):
        assert not answers_equal(CanonicalAnswer.numeric("5"), CanonicalAnswer.choice("C"))

    def test_unparsed_identical_text_only(self):
        assert answers_equal(CanonicalAnswer.unparsed("foo"), CanonicalAnswer.unparsed("foo"))
        assert not answers_equal(CanonicalAnswer.unparsed("foo"), CanonicalAnswer.unparsed("bar"))

    def test_equivalence_relation(self):
        rng = random.Random(11)
        pool = [
            CanonicalAnswer.numeric("5"),
            CanonicalAnswer.numeric("5.00"),
            CanonicalAnswer.numeric("7"),
            CanonicalAnswer.choice("A"),
            CanonicalAnswer.choice("a"),
            CanonicalAnswer.unparsed("x"),
            CanonicalAnswer.unparsed("y"),
        ]
        for _ in range(500):
            a, b, c = (rng.choice(pool) for _ in range(3))
            assert answers_equal(a, a)
            assert answers_equal(a, b) == answers_equal(b, a)
            if answers_equal(a, b) and answers_equal(b, c):
                assert answers_equal(a, c)


class TestVote:
    def test_strict_majority(self):
        got = majority_vote([CanonicalAnswer.numeric(v) for v in ("7", "7", "3")])
        assert got.numeric_value == Decimal("7")

    def test_all_tie_earliest_wins(self):
        got = majority_vote([CanonicalAnswer.numeric(v) for v in ("2", "3", "4")])
        assert got.numeric_value == Decimal("2")

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            majority_vote([])

    def test_unparsed_votes_as_own_class(self):
        answers = [
            CanonicalAnswer.unparsed("??"),
            CanonicalAnswer.unparsed("??"),
            CanonicalAnswer.numeric("4"),
        ]
        assert majority_vote(answers).kind == "unparsed"

    def test_shuffled_multiset_matches_brute_force(self):
        # 20 answers drawn from {5 x9, 8 x7, 3 x4}; strict winner is 5 under
        # every shuffle (frozen expectation from counting the multiset).
        rng = random.Random(3)
        values = ["5"] * 9 + ["8"] * 7 + ["3"] * 4
        for _ in range(25):
            rng.shuffle(values)
            got = majority_vote([CanonicalAnswer.numeric(v) for v in values])
            assert got.numeric_value == Decimal("5")


class TestIdempotence:
    @pytest.mark.parametrize(
        "answer",
        [
            CanonicalAnswer.numeric("1200"),
            CanonicalAnswer.numeric("0.75"),
            CanonicalAnswer.numeric("-3"),
            CanonicalAnswer.numeric("5.0"),
            CanonicalAnswer.choice("C"),
            CanonicalAnswer.choice("e"),
        ],
    )
    def test_reextraction_round_trip(self, answer):
        task = "numeric" if answer.kind == "numeric" else "choice"
        again = extract_answer(f"The answer is {answer.text}.", task)
        assert answers_equal(answer, again)


class TestDecimalHelpers:
    def test_format_strips_trailing_zeros_without_exponent(self):
        assert format_decimal(Decimal("1200.00")) == "1200"
        assert format_decimal(Decimal("5.0")) == "5"
        assert format_decimal(Decimal("0.750")) == "0.75"
        assert format_decimal(Decimal("-0")) == "0"

    def test_parse_number_token(self):
        assert parse_number_token("1,234,567") == Decimal("1234567")
        assert parse_number_token("3/4") == Decimal("0.75")
        assert parse_number_token("1/3") is None

    def test_serialization_round_trip(self):
        for ans in (
            CanonicalAnswer.numeric("27.675", raw_span="$27.675"),
            CanonicalAnswer.choice("B", raw_span="(B)"),
            CanonicalAnswer.unparsed("no idea"),
        ):
            assert answers_equal(CanonicalAnswer.from_dict(ans.to_dict()), ans)
