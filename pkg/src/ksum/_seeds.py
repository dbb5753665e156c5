"""Counter-based seed derivation so repeat runs are independent but
reproducible from one master seed."""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, *counters: int) -> int:
    """Mix a master seed with counter values into a fresh 64-bit seed."""
    x = master & _MASK64
    for c in counters:
        x = splitmix64(x ^ (c & _MASK64))
    return x


def rng_from(master: int, *counters: int) -> random.Random:
    return random.Random(derive_seed(master, *counters))
