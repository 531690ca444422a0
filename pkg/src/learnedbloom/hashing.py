"""Seeded, reproducible hashing for filter probes and seed derivation.

Keys are arbitrary byte strings; integer keys are canonically encoded as
8-byte little-endian words.  Probe sequences come from a 128-bit keyed
hash split into a pair (h1, h2) with h2 forced odd, probe i landing on
(h1 + i*h2) mod m.  Exactly 8-byte keys take a splitmix64-style mixing
path that vectorizes with numpy; all other lengths go through keyed
blake2b.  Both paths are deterministic functions of (key bytes, seed),
and the scalar and batch integer paths agree bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ParameterError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_GOLDEN2 = (2 * _GOLDEN) & _MASK
_SEED_SALT = 0xA0761D6478BD642F


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix64_batch(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _seed_base(seed: int) -> int:
    return _mix64((seed & _MASK) ^ _SEED_SALT)


def encode_key(key) -> bytes:
    """Canonical byte encoding: bytes pass through, integers become 8-byte little-endian."""
    if isinstance(key, (bytes, bytearray)):
        return bytes(key)
    if isinstance(key, (int, np.integer)):
        value = int(key)
        if not 0 <= value < 1 << 64:
            raise ParameterError(f"integer key {value} outside the 64-bit range")
        return value.to_bytes(8, "little")
    raise ParameterError(f"unsupported key type {type(key).__name__}")


def hash_pair(key: bytes, seed: int) -> tuple[int, int]:
    """128-bit keyed hash of ``key`` split into (h1, h2), h2 odd."""
    if len(key) == 8:
        z = (int.from_bytes(key, "little") + _seed_base(seed)) & _MASK
        h1 = _mix64((z + _GOLDEN) & _MASK)
        h2 = _mix64((z + _GOLDEN2) & _MASK)
    else:
        digest = hashlib.blake2b(
            key, digest_size=16, key=(seed & _MASK).to_bytes(8, "little")
        ).digest()
        h1 = int.from_bytes(digest[:8], "little")
        h2 = int.from_bytes(digest[8:], "little")
    return h1, h2 | 1


def hash_pair_batch(keys: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`hash_pair` for uint64 key arrays (the 8-byte path)."""
    z = np.atleast_1d(np.asarray(keys, dtype=np.uint64)) + np.uint64(_seed_base(seed))
    h1 = _mix64_batch(z + np.uint64(_GOLDEN))
    h2 = _mix64_batch(z + np.uint64(_GOLDEN2))
    return h1, h2 | np.uint64(1)


def derive_seed(seed: int, label: str) -> int:
    """Stable per-component seed: keyed blake2b of the label, truncated to 64 bits.

    Every source of randomness in an experiment derives its own seed from one
    top-level seed this way, so a single value reproduces the whole run.
    """
    digest = hashlib.blake2b(
        label.encode("utf-8"), digest_size=8, key=(seed & _MASK).to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest, "little")
