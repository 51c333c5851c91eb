"""Portable seeded randomness.

A 64-bit linear congruential generator with Knuth's MMIX constants::

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2**64

The seed is the initial state. A uniform double in [0, 1) is the top 53 bits
of the next state divided by 2**53. Any implementation following these two
lines reproduces the same streams.
"""
from __future__ import annotations

import numpy as np

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (MULTIPLIER * self.state + INCREMENT) & _MASK
        return self.state

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, low: float = -1.0, high: float = 1.0, size=None):
        if size is None:
            return low + (high - low) * self.random()
        shape = (size,) if isinstance(size, int) else tuple(size)
        out = np.empty(int(np.prod(shape)))
        for i in range(out.shape[0]):
            out[i] = low + (high - low) * self.random()
        return out.reshape(shape)

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return low + int(self.random() * (high - low + 1))
