"""Seedable, splittable random streams.

Every sampler in this package takes an :class:`RngStream` token instead of a
live generator.  A token is an immutable ``(seed, stream_id)`` pair that keys
a Philox-4x64 counter-based bit generator, so the byte stream it produces is
a pure function of the token: calling the same operation twice with the same
token yields bit-identical output, and distinct stream ids give statistically
independent streams.  Parallel workers therefore never share mutable state;
they are handed disjoint tokens.

Gaussian variates come from numpy's ziggurat implementation
(``Generator.standard_normal``) on top of Philox; this pairing is the fixed,
documented sampling algorithm of the build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # SplitMix64 finalizer; bijective on 64-bit words.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Immutable token naming one reproducible random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derive substream ``index``; pure in ``(self, index)``.

        Children of distinct parents or distinct indices collide only if two
        64-bit hashes coincide, which is negligible at any practical fan-out.
        """
        mixed = _splitmix64(self.stream_id ^ _splitmix64(int(index) & _MASK64))
        return RngStream(self.seed, mixed)


def sample_normal(mean: float, variance: float, rng: RngStream) -> float:
    """One draw from N(mean, variance); ``variance == 0`` returns ``mean``."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return float(mean)
    return float(mean + math.sqrt(variance) * rng.generator().standard_normal())
