"""Walkthrough: pulling canonical answers out of raw model text.

Run: python3 demos/01_answer_extraction.py
"""

from selfpolish import CanonicalAnswer, answers_equal, extract_answer, majority_vote

REPLIES = [
    ("So she has $1,200.00 left. The answer is $1,200.00.", "numeric"),
    ("The answer is 3/4.", "numeric"),
    ("Discount leaves 20%.", "numeric"),
    ("Therefore the answer is (C).", "choice"),
    ("I cannot determine this.", "numeric"),
]

print("== extraction ==")
for text, task in REPLIES:
    answer = extract_answer(text, task)
    print(f"{text!r:60s} [{task}] -> kind={answer.kind} value={answer.text!r}")

print("\n== equality is exact-decimal, not float ==")
five = extract_answer("The answer is 5.0", "numeric")
print("5.0 == 5 ?", answers_equal(five, CanonicalAnswer.numeric("5")))
print("0.75 == 3/4 ?", answers_equal(
    CanonicalAnswer.numeric("0.75"), extract_answer("The answer is 3/4.", "numeric")
))

print("\n== majority voting ==")
votes = [CanonicalAnswer.numeric(v) for v in ["7", "7", "3"]]
print("votes 7,7,3      ->", majority_vote(votes).text)
votes = [CanonicalAnswer.numeric(v) for v in ["2", "3", "4"]]
print("votes 2,3,4 (tie) ->", majority_vote(votes).text, "(earliest occurrence wins ties)")
