"""Standard Bloom filter with seeded double hashing.

Also provides the closed-form fill-ratio and false-positive expressions
for a filter of m bits and k hashes holding n keys, and the sizing
inverse that picks (m, k) for a target false positive probability.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FilterFormatError, ParameterError
from .hashing import encode_key, hash_pair, hash_pair_batch

_MASK = (1 << 64) - 1
_LN2 = math.log(2.0)

MAGIC = b"LBF1"
_HEADER = struct.Struct("<4sQIQQ")  # magic, m, k, seed, inserted_count


@dataclass(frozen=True)
class FilterParams:
    """Bloom filter sizing; ``target_fpp`` records the design point when sized from one."""

    m: int
    k: int
    target_fpp: float | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("bit count m must be >= 1")
        if self.k < 1:
            raise ParameterError("hash count k must be >= 1")
        if self.target_fpp is not None and not 0.0 < self.target_fpp < 1.0:
            raise ParameterError("target_fpp must lie in (0, 1)")


class BloomFilter:
    """An m-bit array probed by k seeded hash functions.

    Answers may be false positives, never false negatives.  Construction is
    single-writer; once insertions stop the filter is immutable and safe for
    any number of concurrent readers.  Two filters built with the same
    (m, k, seed) and insertion sequence are bit-identical.
    """

    def __init__(self, m: int, k: int, seed: int):
        if m < 1:
            raise ParameterError("bit count m must be >= 1")
        if k < 1:
            raise ParameterError("hash count k must be >= 1")
        self.m = int(m)
        self.k = int(k)
        self.seed = int(seed) & _MASK
        self._bits = np.zeros(self.m, dtype=np.uint8)
        self.inserted_count = 0

    @classmethod
    def from_params(cls, params: FilterParams, seed: int) -> "BloomFilter":
        return cls(params.m, params.k, seed)

    def _positions(self, key) -> list[int]:
        h1, h2 = hash_pair(encode_key(key), self.seed)
        return [((h1 + i * h2) & _MASK) % self.m for i in range(self.k)]

    def _probe_matrix(self, keys: np.ndarray) -> np.ndarray:
        h1, h2 = hash_pair_batch(keys, self.seed)
        i = np.arange(self.k, dtype=np.uint64)
        pos = (h1[:, None] + i[None, :] * h2[:, None]) % np.uint64(self.m)
        return pos.astype(np.int64)

    def insert(self, key) -> None:
        """Set the k probe bits for ``key``; idempotent on the bit array."""
        self._bits[self._positions(key)] = 1
        self.inserted_count += 1

    def insert_many(self, keys) -> None:
        """Bulk insert of integer keys (uint64 array or sequence)."""
        arr = _as_uint64(keys)
        if arr is None:
            for key in keys:
                self.insert(key)
            return
        if arr.size:
            self._bits[self._probe_matrix(arr).reshape(-1)] = 1
        self.inserted_count += int(arr.size)

    def contains(self, key) -> bool:
        """True iff all k probed bits are set; never False for an inserted key."""
        bits = self._bits
        return all(bits[p] for p in self._positions(key))

    def contains_many(self, keys) -> np.ndarray:
        """Vectorized membership test; returns a boolean array."""
        arr = _as_uint64(keys)
        if arr is None:
            return np.fromiter((self.contains(k) for k in keys), dtype=bool)
        if arr.size == 0:
            return np.zeros(0, dtype=bool)
        return self._bits[self._probe_matrix(arr)].all(axis=1)

    @property
    def popcount(self) -> int:
        return int(self._bits.sum())

    @property
    def fill_ratio(self) -> float:
        """Fraction of bits set to 1 (exact)."""
        return self.popcount / self.m

    def to_bytes(self) -> bytes:
        """Header (magic, m, k, seed, inserted_count; little-endian) + packed bits.

        The bit array is packed little-endian within each byte and padded to a
        whole number of bytes.  Round-trips bit-exactly.
        """
        header = _HEADER.pack(MAGIC, self.m, self.k, self.seed, self.inserted_count)
        return header + np.packbits(self._bits, bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BloomFilter":
        if len(data) < _HEADER.size:
            raise FilterFormatError("truncated filter header")
        magic, m, k, seed, inserted = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FilterFormatError(f"bad magic {magic!r}")
        if m < 1 or k < 1:
            raise FilterFormatError("header declares an empty filter")
        body = data[_HEADER.size :]
        if len(body) != (m + 7) // 8:
            raise FilterFormatError("bit array length does not match header")
        filt = cls(m, k, seed)
        filt._bits = np.unpackbits(
            np.frombuffer(body, dtype=np.uint8), count=m, bitorder="little"
        )
        filt.inserted_count = int(inserted)
        return filt

    def __eq__(self, other) -> bool:
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return (
            (self.m, self.k, self.seed, self.inserted_count)
            == (other.m, other.k, other.seed, other.inserted_count)
            and bool(np.array_equal(self._bits, other._bits))
        )


def _as_uint64(keys) -> np.ndarray | None:
    """Coerce to a uint64 array, or None when keys are not all integers."""
    if isinstance(keys, np.ndarray) and keys.dtype.kind in "ui":
        return keys.astype(np.uint64, copy=False)
    try:
        arr = np.asarray(keys, dtype=np.uint64)
    except (TypeError, ValueError, OverflowError):
        return None
    return arr


def expected_fill_ratio(n: int, m: int, k: int) -> float:
    """Expected 1s fraction after inserting n distinct keys: 1 - (1 - 1/m)^(k*n)."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    if n < 0:
        raise ParameterError("n must be >= 0")
    if k < 1:
        raise ParameterError("k must be >= 1")
    if n == 0:
        return 0.0
    if m == 1:
        return 1.0
    return -math.expm1(k * n * math.log1p(-1.0 / m))


def expected_fpp(n: int, m: int, k: int) -> float:
    """Expected false positive probability: (expected fill ratio)^k."""
    return expected_fill_ratio(n, m, k) ** k


def params_for_target(n: int, target_fpp: float) -> FilterParams:
    """Size a filter for n keys at a target false positive probability.

    m = ceil(n * log2(1/target_fpp) / ln 2), k = round((m/n) * ln 2), k >= 1.
    The asymptotic formula can overshoot the target by a hair at very small n,
    so m is bumped until expected_fpp(n, m, k) <= 1.1 * target_fpp holds.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.0 < target_fpp < 1.0:
        raise ParameterError("target_fpp must lie in (0, 1)")
    m = math.ceil(n * math.log2(1.0 / target_fpp) / _LN2)
    while True:
        k = max(1, round((m / n) * _LN2))
        if expected_fpp(n, m, k) <= 1.1 * target_fpp:
            return FilterParams(m=m, k=k, target_fpp=target_fpp)
        m += 1
