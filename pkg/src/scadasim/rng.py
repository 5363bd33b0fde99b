"""Portable seeded random stream.

The raw source is PCG64 (numpy's ``bit_generator.random_raw``), whose output
is fixed by its published algorithm. Conversions to floats, bounded integers
and normals are done here, not by numpy's distribution code, so a seed gives
the same numbers on every platform and numpy release:

* uniform: top 53 bits of a raw word times 2**-53, in [0, 1)
* integer in [lo, hi): rejection sampling on raw words
* normal: Box-Muller on pairs of uniforms
"""
import numpy as np

ALGORITHM = "PCG64 raw words; uniform = (w >> 11) * 2**-53; normal = Box-Muller"
_SCALE = 1.0 / 9007199254740992.0  # 2**-53


class SimRandom:
    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._bits = np.random.PCG64(seed)

    def raw(self, n=None):
        if n is None:
            return int(self._bits.random_raw())
        return np.asarray(self._bits.random_raw(n), dtype=np.uint64)

    def uniform(self, n=None, low=0.0, high=1.0):
        if n is None:
            return low + (high - low) * ((self.raw() >> 11) * _SCALE)
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _SCALE
        return low + (high - low) * u

    def integer(self, low, high):
        """Uniform integer in [low, high)."""
        span = high - low
        if span <= 0:
            raise ValueError("empty integer range")
        limit = (2**64 // span) * span
        while True:
            w = self.raw()
            if w < limit:
                return low + w % span

    def normal(self, n, sigma=1.0):
        pairs = (n + 1) // 2
        u1 = 1.0 - self.uniform(pairs)  # (0, 1], safe for log
        u2 = self.uniform(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        return sigma * z[:n]
