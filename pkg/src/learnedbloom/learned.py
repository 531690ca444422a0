"""Learned Bloom filter: a scorer pre-filter, a threshold, and a backup filter.

A query scoring at or above the threshold is answered positive outright;
anything below is referred to a standard backup Bloom filter that holds
exactly the build keys the scorer missed, so the composite never returns
a false negative.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .bloom import BloomFilter, FilterParams, expected_fpp, params_for_target
from .errors import FilterFormatError, ParameterError
from .scorers import Scorer, _scores_for, scorer_from_text, scorer_to_text
from .workloads import QueryDistribution, sample

_LEN = struct.Struct("<Q")


class LearnedBloomFilter:
    """Composite membership filter with no false negatives.

    Ties at the threshold count as positive.  The structure is immutable for
    queries after build; ``insert`` requires exclusive access and there is no
    deletion.  ``inserted_after_build`` counts post-build insertions so
    reports can flag false-positive drift in the (smaller) backup filter.
    """

    def __init__(
        self,
        scorer: Scorer,
        tau: float,
        backup: BloomFilter,
        key_count: int,
        below_threshold_count: int,
        inserted_after_build: int = 0,
    ):
        if not 0.0 <= tau <= 1.0:
            raise ParameterError("threshold tau must lie in [0, 1]")
        self.scorer = scorer
        self.tau = float(tau)
        self.backup = backup
        self.key_count = int(key_count)
        self.below_threshold_count = int(below_threshold_count)
        self.inserted_after_build = int(inserted_after_build)

    @classmethod
    def build(
        cls,
        keys,
        scorer: Scorer,
        tau: float,
        backup_params: FilterParams,
        seed: int,
    ) -> "LearnedBloomFilter":
        """Score every key and store the below-threshold ones in the backup filter."""
        keys = list(keys)
        if not keys:
            raise ParameterError("key set must be nonempty")
        if not 0.0 <= tau <= 1.0:
            raise ParameterError("threshold tau must lie in [0, 1]")
        backup = BloomFilter.from_params(backup_params, seed)
        scores = _scores_for(scorer, keys)
        below = [k for k, s in zip(keys, scores) if s < tau]
        backup.insert_many(below)
        return cls(
            scorer,
            tau,
            backup,
            key_count=len(keys),
            below_threshold_count=len(below),
        )

    def contains(self, key) -> bool:
        """Positive iff score >= tau, or the backup filter reports the key."""
        if self.scorer.score(key) >= self.tau:
            return True
        return self.backup.contains(key)

    def contains_many(self, keys) -> np.ndarray:
        """Vectorized membership test for integer keys."""
        arr = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
        result = self.scorer.score_batch(arr) >= self.tau
        pending = ~result
        if pending.any():
            result[pending] = self.backup.contains_many(arr[pending])
        return result

    def insert(self, key) -> bool:
        """Add a key; returns True when the backup filter was modified.

        A key that already tests positive (above threshold, or a backup hit)
        is left alone, so repeated inserts are no-ops.
        """
        if self.contains(key):
            return False
        self.backup.insert(key)
        self.inserted_after_build += 1
        return True

    def size_bits(self) -> int:
        """Scorer representation bits plus backup bit-array size (metadata excluded)."""
        return self.scorer.size_bits() + self.backup.m

    def to_bytes(self) -> bytes:
        """Length-prefixed concatenation: scorer record, hex-float tau, backup filter, counts."""
        meta = json.dumps(
            {
                "key_count": self.key_count,
                "below_threshold_count": self.below_threshold_count,
                "inserted_after_build": self.inserted_after_build,
            },
            sort_keys=True,
        )
        parts = [
            scorer_to_text(self.scorer).encode("utf-8"),
            float(self.tau).hex().encode("ascii"),
            self.backup.to_bytes(),
            meta.encode("utf-8"),
        ]
        return b"".join(_LEN.pack(len(p)) + p for p in parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LearnedBloomFilter":
        parts = []
        offset = 0
        for _ in range(4):
            if offset + _LEN.size > len(data):
                raise FilterFormatError("truncated learned filter record")
            (length,) = _LEN.unpack_from(data, offset)
            offset += _LEN.size
            if offset + length > len(data):
                raise FilterFormatError("learned filter part overruns the record")
            parts.append(data[offset : offset + length])
            offset += length
        if offset != len(data):
            raise FilterFormatError("trailing bytes after learned filter record")
        scorer = scorer_from_text(parts[0].decode("utf-8"))
        try:
            tau = float.fromhex(parts[1].decode("ascii"))
            meta = json.loads(parts[3].decode("utf-8"))
            return cls(
                scorer,
                tau,
                BloomFilter.from_bytes(parts[2]),
                key_count=int(meta["key_count"]),
                below_threshold_count=int(meta["below_threshold_count"]),
                inserted_after_build=int(meta["inserted_after_build"]),
            )
        except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
            raise FilterFormatError(f"malformed learned filter record: {exc}") from exc


@dataclass(frozen=True)
class SweepPoint:
    """One threshold candidate: query mass above it, backup load, size, predicted rate."""

    tau: float
    alpha_estimate: float
    backup_keys: int
    total_bits: int
    model_fpr: float


def threshold_sweep(
    keys,
    scorer: Scorer,
    taus,
    dist: QueryDistribution,
    samples: int,
    backup_target_fpp: float,
    rng_seed: int,
) -> list[SweepPoint]:
    """Evaluate candidate thresholds against one shared query sample.

    A single sample set serves every threshold, so along a sorted grid the
    alpha estimates are non-increasing and the backup key counts
    non-decreasing by pointwise set inclusion, not merely in expectation.
    The backup for each candidate is sized for its below-threshold keys at
    ``backup_target_fpp``, and the predicted rate composes the sampled alpha
    with the sized backup's expected false positive probability.
    """
    taus = [float(t) for t in taus]
    if not taus:
        raise ParameterError("tau grid must be nonempty")
    if any(not 0.0 <= t <= 1.0 for t in taus):
        raise ParameterError("every tau must lie in [0, 1]")
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    if not 0.0 < backup_target_fpp < 1.0:
        raise ParameterError("backup_target_fpp must lie in (0, 1)")
    keys = list(keys)
    if not keys:
        raise ParameterError("key set must be nonempty")
    queries = sample(dist, samples, rng_seed)
    query_scores = scorer.score_batch(queries)
    key_scores = _scores_for(scorer, keys)
    points = []
    for tau in taus:
        alpha = float((query_scores >= tau).mean())
        below = int((key_scores < tau).sum())
        params = params_for_target(max(below, 1), backup_target_fpp)
        backup_fpr = expected_fpp(below, params.m, params.k)
        points.append(
            SweepPoint(
                tau=tau,
                alpha_estimate=alpha,
                backup_keys=below,
                total_bits=scorer.size_bits() + params.m,
                model_fpr=alpha + (1.0 - alpha) * backup_fpr,
            )
        )
    return points
