"""Per-run Bloom filters with Murmur3 double hashing.

Probe positions are derived from one 128-bit Murmur3 (x64 variant, seed 0)
hash of the key's little-endian 4-byte encoding: the two 64-bit halves h1
and h2 generate all k positions as (h1 + i*h2) mod m_bits, so adding or
testing a key costs a single hash regardless of k.  The hash is pinned to
this exact variant so probe positions are reproducible across platforms.

The bit array is held one byte per bit (numpy bool) rather than packed:
filters are rebuilt from run files on open and never persisted, so the
in-memory layout is free to favor probe speed.
"""

from __future__ import annotations

import math

import numpy as np

_M64 = (1 << 64) - 1
_C1 = 0x87C37B91114253D5
_C2 = 0x4CF5AD432745937F
_F1 = 0xFF51AFD7ED558CCD
_F2 = 0xC4CEB9FE1A85EC53

_LN2_SQ = math.log(2) ** 2


def _fmix64(k: int) -> int:
    k ^= k >> 33
    k = (k * _F1) & _M64
    k ^= k >> 33
    k = (k * _F2) & _M64
    k ^= k >> 33
    return k


def murmur3_x64_128(data: bytes, seed: int = 0) -> tuple[int, int]:
    """128-bit Murmur3 (x64 variant) of ``data``; returns the (h1, h2) halves."""
    length = len(data)
    h1 = h2 = seed & _M64
    nblocks = length // 16
    for off in range(0, nblocks * 16, 16):
        k1 = int.from_bytes(data[off:off + 8], "little")
        k2 = int.from_bytes(data[off + 8:off + 16], "little")
        k1 = (k1 * _C1) & _M64
        k1 = ((k1 << 31) | (k1 >> 33)) & _M64
        k1 = (k1 * _C2) & _M64
        h1 ^= k1
        h1 = ((h1 << 27) | (h1 >> 37)) & _M64
        h1 = (h1 + h2) & _M64
        h1 = (h1 * 5 + 0x52DCE729) & _M64
        k2 = (k2 * _C2) & _M64
        k2 = ((k2 << 33) | (k2 >> 31)) & _M64
        k2 = (k2 * _C1) & _M64
        h2 ^= k2
        h2 = ((h2 << 31) | (h2 >> 33)) & _M64
        h2 = (h2 + h1) & _M64
        h2 = (h2 * 5 + 0x38495AB5) & _M64
    tail = data[nblocks * 16:]
    if len(tail) > 8:
        k2 = int.from_bytes(tail[8:], "little")
        k2 = (k2 * _C2) & _M64
        k2 = ((k2 << 33) | (k2 >> 31)) & _M64
        k2 = (k2 * _C1) & _M64
        h2 ^= k2
    if tail:
        k1 = int.from_bytes(tail[:8], "little")
        k1 = (k1 * _C1) & _M64
        k1 = ((k1 << 31) | (k1 >> 33)) & _M64
        k1 = (k1 * _C2) & _M64
        h1 ^= k1
    h1 ^= length
    h2 ^= length
    h1 = (h1 + h2) & _M64
    h2 = (h2 + h1) & _M64
    h1 = _fmix64(h1)
    h2 = _fmix64(h2)
    h1 = (h1 + h2) & _M64
    h2 = (h2 + h1) & _M64
    return h1, h2


def hash_key(key: int) -> tuple[int, int]:
    """Murmur3 x64 128 of a signed 32-bit key's little-endian bytes, seed 0.

    Specialized inline version of :func:`murmur3_x64_128` for the 4-byte
    case; this is the hottest function in the engine.
    """
    k1 = key & 0xFFFFFFFF
    k1 = (k1 * _C1) & _M64
    k1 = ((k1 << 31) | (k1 >> 33)) & _M64
    k1 = (k1 * _C2) & _M64
    h1 = ((k1 ^ 4) + 4) & _M64
    h2 = (4 + h1) & _M64
    h1 ^= h1 >> 33
    h1 = (h1 * _F1) & _M64
    h1 ^= h1 >> 33
    h1 = (h1 * _F2) & _M64
    h1 ^= h1 >> 33
    h2 ^= h2 >> 33
    h2 = (h2 * _F1) & _M64
    h2 ^= h2 >> 33
    h2 = (h2 * _F2) & _M64
    h2 ^= h2 >> 33
    h1 = (h1 + h2) & _M64
    h2 = (h2 + h1) & _M64
    return h1, h2


def _fmix64_np(k: np.ndarray) -> np.ndarray:
    k = k ^ (k >> np.uint64(33))
    k = k * np.uint64(_F1)
    k = k ^ (k >> np.uint64(33))
    k = k * np.uint64(_F2)
    k = k ^ (k >> np.uint64(33))
    return k


def hash_keys(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`hash_key` over an int32 array; returns uint64 (h1, h2)."""
    k1 = keys.astype(np.uint32).astype(np.uint64)
    k1 = k1 * np.uint64(_C1)
    k1 = (k1 << np.uint64(31)) | (k1 >> np.uint64(33))
    k1 = k1 * np.uint64(_C2)
    h1 = (k1 ^ np.uint64(4)) + np.uint64(4)
    h2 = np.uint64(4) + h1
    h1 = _fmix64_np(h1)
    h2 = _fmix64_np(h2)
    h1 = h1 + h2
    h2 = h2 + h1
    return h1, h2


def optimal_k(epsilon: float) -> int:
    """Number of probe positions: round(-log2(epsilon)), at least 1."""
    return max(1, round(-math.log2(epsilon)))


def optimal_m_bits(n_expected: int, epsilon: float) -> int:
    """Bit count: ceil(-n * ln(epsilon) / (ln 2)^2), at least 1."""
    return max(1, math.ceil(-n_expected * math.log(epsilon) / _LN2_SQ))


class BloomFilter:
    """Probabilistic membership set for one run.

    No false negatives; false positives at roughly the configured rate
    when filled to the capacity it was sized for.  Bits only ever flip
    0 -> 1, so answers are monotone under further adds.
    """

    __slots__ = ("k", "m_bits", "n_expected", "_bits", "_view")

    def __init__(self, n_expected: int, epsilon: float):
        if n_expected < 1:
            raise ValueError("n_expected must be >= 1")
        if not (0.0 < epsilon < 1.0):
            raise ValueError("epsilon out of range: must lie in (0, 1)")
        self.n_expected = n_expected
        self.k = optimal_k(epsilon)
        self.m_bits = optimal_m_bits(n_expected, epsilon)
        self._bits = np.zeros(self.m_bits, dtype=np.bool_)
        self._view = memoryview(self._bits)

    def probe_positions(self, key: int) -> list[int]:
        """The k bit indices (h1 + i*h2) mod m_bits probed for ``key``."""
        h1, h2 = hash_key(key)
        m = self.m_bits
        pos = h1 % m
        step = h2 % m
        out = []
        for _ in range(self.k):
            out.append(pos)
            pos += step
            if pos >= m:
                pos -= m
        return out

    def add(self, key: int) -> None:
        self.add_hashed(*hash_key(key))

    def add_hashed(self, h1: int, h2: int) -> None:
        m = self.m_bits
        pos = h1 % m
        step = h2 % m
        view = self._view
        for _ in range(self.k):
            view[pos] = True
            pos += step
            if pos >= m:
                pos -= m

    def add_batch(self, keys: np.ndarray) -> None:
        """Add an int32 array of keys in one vectorized pass."""
        m = self.m_bits
        bits = self._bits
        for start in range(0, len(keys), 1 << 17):
            chunk = keys[start:start + (1 << 17)]
            h1, h2 = hash_keys(chunk)
            pos = (h1 % np.uint64(m)).astype(np.int64)
            step = (h2 % np.uint64(m)).astype(np.int64)
            for _ in range(self.k):
                bits[pos] = True
                pos += step
                pos[pos >= m] -= m

    def may_contain(self, key: int) -> bool:
        return self.may_contain_hashed(*hash_key(key))

    def may_contain_hashed(self, h1: int, h2: int) -> bool:
        m = self.m_bits
        pos = h1 % m
        step = h2 % m
        view = self._view
        for _ in range(self.k):
            if not view[pos]:
                return False
            pos += step
            if pos >= m:
                pos -= m
        return True

    def fill_ratio(self) -> float:
        """Fraction of set bits (diagnostic)."""
        return float(np.count_nonzero(self._bits)) / self.m_bits
