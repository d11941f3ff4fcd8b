"""splitmix64 streams: portable, counter-based and bit-exact across runs."""

from __future__ import annotations

import math
from typing import MutableSequence, Sequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_UNIT = 2.0 ** -53

T = TypeVar("T")

def mix64(z: int) -> int:

    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64

    return z ^ (z >> 31)

def _mix64_array(z: np.ndarray) -> np.ndarray:

    with np.errstate(over="ignore"):

        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)

        return z ^ (z >> np.uint64(31))

class SplitMix64:

    """The i-th output is mix64(seed + i * gamma); bulk draws vectorize that."""

    def __init__(self, seed: int) -> None:

        self.state = seed & MASK64

    def next_u64(self) -> int:

        self.state = (self.state + GOLDEN_GAMMA) & MASK64

        return mix64(self.state)

    def random(self) -> float:

        """Uniform double in [0, 1) from the top 53 bits."""

        return (self.next_u64() >> 11) * _UNIT

    def normal(self) -> float:

        """Standard normal draw (Box-Muller, two uniforms per call)."""

        u1 = 1.0 - self.random()
        u2 = self.random()

        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def uniform_array(self, shape: Sequence[int]) -> np.ndarray:

        """Same values as repeated random() calls, in row-major order."""

        count = math.prod(shape)
        steps = np.arange(1, count + 1, dtype=np.uint64)

        with np.errstate(over="ignore"):

            counters = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)

        self.state = (self.state + count * GOLDEN_GAMMA) & MASK64
        values = (_mix64_array(counters) >> np.uint64(11)).astype(np.float64) * _UNIT

        return values.reshape(tuple(shape))

    def derive(self, index: int) -> "SplitMix64":

        """Independent substream keyed by ``index``; does not advance this stream."""

        return SplitMix64(mix64((self.state + GOLDEN_GAMMA * (index + 1)) & MASK64))

    def shuffle(self, items: MutableSequence[T]) -> None:

        """In-place Fisher-Yates."""

        for i in range(len(items) - 1, 0, -1):

            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]

