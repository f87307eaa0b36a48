"""Deterministic counter-based random stream for the simulation world.

The generator is SplitMix64: output k of a stream seeded with s is

    mix(s + (k + 1) * 0x9E3779B97F4A7C15)

where mix is the SplitMix64 finaliser (xor-shift 30, multiply
0xBF58476D1CE4E5B9, xor-shift 27, multiply 0x94D049BB133111EB, xor-shift 31),
everything modulo 2**64. Uniform doubles take the top 53 bits; standard
normals come from Box-Muller on consecutive uniform pairs. A request for m
normals always consumes 2 * ceil(m / 2) counter values: the first half of the
batch feeds the radius term, the second half the angle term.

The constants are spelled out so an implementation in any language can
reproduce a scenario's noise stream bit for bit.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(2**-53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _MIX1
    z = z ^ (z >> np.uint64(27))
    z = z * _MIX2
    return z ^ (z >> np.uint64(31))


class CounterRng:
    """Sequential view of the counter stream with draw accounting."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self.count = 0

    def raw(self, k: int) -> np.ndarray:
        """Next k raw 64-bit outputs."""
        idx = np.arange(self.count + 1, self.count + k + 1, dtype=np.uint64)
        self.count += k
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * _GAMMA)

    def uniform(self, k: int) -> np.ndarray:
        """Next k doubles in [0, 1)."""
        return (self.raw(k) >> np.uint64(11)).astype(float) * _U53

    def normal(self, k: int) -> np.ndarray:
        """Next k standard normal deviates (Box-Muller)."""
        pairs = (k + 1) // 2
        u1 = np.maximum(self.uniform(pairs), _U53)
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:k]
