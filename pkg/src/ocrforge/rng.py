"""SplitMix64 generator and the seed-derivation helpers built on it.

Every random decision in the package goes through this module so that a
given seed produces the same stream on any platform and in any language
that implements the same 64-bit arithmetic.
"""

from __future__ import annotations

import math
from typing import MutableSequence, TypeVar

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

_TWO64 = 1 << 64
_BELOW_ONE = math.nextafter(1.0, 0.0)

T = TypeVar("T")


class SplitMix64:
    """Steele/Lea/Flood SplitMix64.

    >>> SplitMix64(0).next_u64()
    16294208416658607535
    """

    __slots__ = ("state",)

    def __init__(self, seed: int = 0) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MUL1) & MASK64
        z = ((z ^ (z >> 27)) * _MUL2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """next_u64 / 2**64, correctly rounded; the few words that round up to 1.0 give the largest float below 1."""
        x = self.next_u64() / _TWO64
        return x if x < 1.0 else _BELOW_ONE

    def next_below(self, n: int) -> int:
        """Integer in [0, n) by 128-bit multiply-shift of the next word."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def chance(self, p: float) -> bool:
        return self.next_float() < p


def mix(x: int) -> int:
    """First output of a SplitMix64 seeded with ``x``."""
    return SplitMix64(x).next_u64()


def derive_seed(seed: int, index: int) -> int:
    """Child seed for item ``index`` (line, document) under ``seed``."""
    return mix((seed ^ index) & MASK64)


def shuffle(items: MutableSequence[T], seed: int) -> MutableSequence[T]:
    """In-place Fisher-Yates shuffle driven by SplitMix64(seed)."""
    rng = SplitMix64(seed)
    for i in range(len(items) - 1, 0, -1):
        j = rng.next_below(i + 1)
        items[i], items[j] = items[j], items[i]
    return items
