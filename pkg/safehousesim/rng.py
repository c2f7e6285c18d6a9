"""Deterministic 64-bit generator used for passwords, salts and schedules.

SplitMix64 is fixed bit-exactly so scenario reports reproduce across
machines and implementations.
"""

import hashlib
from typing import Sequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """SplitMix64 stream seeded with a 64-bit integer."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection of the biased tail."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = ((MASK64 + 1) // bound) * bound
        while True:
            draw = self.next_u64()
            if draw < limit:
                return draw % bound

    def between(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return low + self.below(high - low + 1)

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("cannot choose from an empty sequence")
        return items[self.below(len(items))]

    def random_bytes(self, size: int) -> bytes:
        out = bytearray()
        while len(out) < size:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:size])

    def fork(self, label: str) -> "SplitMix64":
        """Independent child stream keyed by label."""
        salt = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")
        return SplitMix64(self.next_u64() ^ salt)
