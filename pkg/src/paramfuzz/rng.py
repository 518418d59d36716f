"""SplitMix64, the single PRNG used for scheduling, wildcard expansion and fuzzing.

The generator is Steele/Lea/Flood's SplitMix64: a 64-bit Weyl sequence
(increment 0x9E3779B97F4A7C15) passed through a variant-13 mixing function.
Every consumer in the package draws from this class so results are
bit-identical across platforms and Python versions.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Combine integers into one well-mixed 64-bit seed."""
    acc = 0
    for p in parts:
        acc = mix64((acc + GOLDEN_GAMMA + (p & MASK64)) & MASK64)
    return acc


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is < 2**-40 for n < 2**24."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive)."""
        return lo + self.below(hi - lo + 1)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def chance(self, p: float) -> bool:
        return self.random() < p

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.below(len(seq))]

    def weighted_index(self, weights: Sequence[float]) -> int:
        total = sum(weights)
        x = self.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if x < acc:
                return i
        return len(weights) - 1

    def fork(self, salt: int) -> "SplitMix64":
        return SplitMix64(derive_seed(self.next_u64(), salt))
