"""Self-contained seeded generator so sampled splits and demo orders are
reproducible across machines and Python versions (no dependence on the
stdlib Mersenne Twister's method-level guarantees)."""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


class SeededRng:
    """splitmix64 stream; pure integer arithmetic, platform independent."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n); rejection sampling avoids modulo bias."""
        if n <= 0:
            raise ValueError("randrange() requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def shuffle(self, xs: list) -> None:
        for i in range(len(xs) - 1, 0, -1):
            j = self.randrange(i + 1)
            xs[i], xs[j] = xs[j], xs[i]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """k items without replacement, order itself randomized."""
        xs = list(seq)
        if k > len(xs):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.randrange(len(xs) - i)
            xs[i], xs[j] = xs[j], xs[i]
        return xs[:k]
