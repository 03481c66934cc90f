"""Independent brute-force references used by the test suite.

These deliberately avoid the library's implementation strategies: scalar
loops instead of vectorized numpy, per-step accumulator wrapping instead of
a single wrap, and an OrderedDict LRU instead of stamped regions.
"""

from collections import OrderedDict

import numpy as np

I16_MIN, I16_MAX = -32768, 32767
_MASK32 = (1 << 32) - 1


def fc_oracle(inp: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Naive triple loop; float32 rounding after every add/mul, ascending k."""
    m, k = inp.shape
    k2, n = weights.shape
    assert k == k2 and bias.shape == (n,)
    out = np.zeros((m, n), dtype=np.float32)
    for mi in range(m):
        for ni in range(n):
            acc = np.float32(bias[ni])
            for ki in range(k):
                prod = np.float32(inp[mi, ki]) * np.float32(weights[ki, ni])
                acc = np.float32(acc + prod)
            out[mi, ni] = acc
    return out


def _wrap32(value: int) -> int:
    value &= _MASK32
    return value - (1 << 32) if value >= (1 << 31) else value


def conv_oracle(inp: np.ndarray, weights: np.ndarray, scale_shift: int) -> np.ndarray:
    """Naive nested loops; the 32-bit accumulator wraps after every product."""
    f, kh, kw = weights.shape
    h, w = inp.shape
    ho, wo = h - kh + 1, w - kw + 1
    out = np.zeros((f, ho, wo), dtype=np.int16)
    for fi in range(f):
        for i in range(ho):
            for j in range(wo):
                acc = 0
                for u in range(kh):
                    for v in range(kw):
                        acc = _wrap32(acc + int(inp[i + u, j + v]) * int(weights[fi, u, v]))
                shifted = acc >> scale_shift
                out[fi, i, j] = max(I16_MIN, min(I16_MAX, shifted))
    return out


class LruOracle:
    """Textbook LRU cache of role ids; counts misses."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.cache: OrderedDict[str, None] = OrderedDict()
        self.misses = 0
        self.hits = 0

    def touch(self, key: str) -> bool:
        """Returns True on miss."""
        if key in self.cache:
            self.cache.move_to_end(key)
            self.hits += 1
            return False
        self.misses += 1
        self.cache[key] = None
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return True

    def loaded(self) -> set[str]:
        return set(self.cache)
