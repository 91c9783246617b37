"""Portable seeded randomness.

Uniforms come from the raw 64-bit output of numpy's PCG64 bit generator
(a fixed, documented stream) seeded through ``SeedSequence``; the top 53
bits become a double in ``[0, 1)``.  Normals use the Box-Muller transform
on pairs of those uniforms, so the same seed yields the same floats
regardless of which sampling algorithms a numpy release ships.
"""

from __future__ import annotations

import numpy as np

_TWO_POW_53 = float(2 ** 53)


class PortableRNG:
    def __init__(self, seed=0):
        self._seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
        self._bits = np.random.PCG64(self._seq)

    def spawn(self, n):
        """Independent child generators (``SeedSequence.spawn``)."""
        return [PortableRNG(s) for s in self._seq.spawn(n)]

    def uniform(self, size=None, low=0.0, high=1.0):
        count = 1 if size is None else int(np.prod(size))
        raw = np.asarray(self._bits.random_raw(count), dtype=np.uint64)
        u = (raw >> np.uint64(11)).astype(np.float64) / _TWO_POW_53
        u = low + (high - low) * u
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None, loc=0.0, scale=1.0):
        count = 1 if size is None else int(np.prod(size))
        pairs = (count + 1) // 2
        u1 = self.uniform(pairs)
        u2 = self.uniform(pairs)
        # 1 - u1 lies in (0, 1], keeping the log finite
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(2 * np.pi * u2)
        z[1::2] = radius * np.sin(2 * np.pi * u2)
        z = loc + scale * z[:count]
        return float(z[0]) if size is None else z.reshape(size)

    def permutation(self, n):
        """Random ordering of ``range(n)`` by sorting uniform keys."""
        return np.argsort(self.uniform(n), kind="stable")
