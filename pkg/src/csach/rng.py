"""SplitMix64, the fixed generator behind every seeded instance.

Chosen because it is a few lines in any language, so instances generated
here can be reproduced bit-for-bit elsewhere.  ``below(k)`` uses rejection
sampling on the full 64-bit output to stay unbiased.
"""
from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        if k <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % k

    def sample(self, population: list, k: int) -> list:
        """``k`` distinct items, order of selection (partial Fisher-Yates)."""
        pool = list(population)
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
