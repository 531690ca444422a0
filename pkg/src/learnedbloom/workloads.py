"""Query workloads: sampleable distributions over the universe minus the key set.

Distributions are immutable descriptions; sampling is seeded rejection
sampling that never emits an excluded key.  Also provides the hot-range
worked example (1000 keys, half clustered in one interval) used by the
reproduction experiments, and dataset file I/O.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, WorkloadError
from .scorers import IntervalScorer

REJECTION_BUDGET = 10**6  # consecutive rejected draws before giving up

_U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class UniformRange:
    """Uniform integers in [lo, hi)."""

    lo: int
    hi: int

    def __post_init__(self):
        if not 0 <= self.lo < self.hi <= 1 << 64:
            raise ParameterError(f"invalid range [{self.lo}, {self.hi})")

    @property
    def size(self) -> int:
        return self.hi - self.lo


@dataclass(frozen=True)
class FixedSet:
    """Uniform over an explicit key list (duplicates weight accordingly)."""

    keys: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(int(k) for k in self.keys))
        if not self.keys:
            raise ParameterError("fixed key set must be nonempty")

    @property
    def size(self) -> int:
        return len(self.keys)


@dataclass(frozen=True)
class Mixture:
    """Weighted mixture of uniform-range / fixed-set components."""

    components: tuple
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.components) != len(self.weights) or not self.components:
            raise ParameterError("mixture needs matching, nonempty components and weights")
        if any(w <= 0 for w in self.weights):
            raise ParameterError("mixture weights must be positive")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ParameterError("mixture weights must sum to 1 within 1e-12")


@dataclass(frozen=True)
class QueryDistribution:
    """A sampleable query description whose samples never land in ``exclusion``."""

    source: UniformRange | FixedSet | Mixture
    exclusion: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "exclusion", frozenset(int(k) for k in self.exclusion))

    @property
    def kind(self) -> str:
        return {UniformRange: "uniform_range", FixedSet: "fixed_set", Mixture: "mixture"}[
            type(self.source)
        ]


def uniform_queries(lo: int, hi: int, exclude=()) -> QueryDistribution:
    return QueryDistribution(UniformRange(lo, hi), frozenset(exclude))


def _draw(source, rng: np.random.Generator, count: int) -> np.ndarray:
    if isinstance(source, UniformRange):
        return rng.integers(source.lo, source.hi, size=count, dtype=np.uint64)
    if isinstance(source, FixedSet):
        keys = np.array(source.keys, dtype=np.uint64)
        return keys[rng.integers(0, len(keys), size=count)]
    if isinstance(source, Mixture):
        idx = rng.choice(len(source.components), size=count, p=np.array(source.weights))
        out = np.empty(count, dtype=np.uint64)
        for ci, component in enumerate(source.components):
            mask = idx == ci
            hits = int(mask.sum())
            if hits:
                out[mask] = _draw(component, rng, hits)
        return out
    raise ParameterError(f"unknown distribution source {type(source).__name__}")


def sample(dist: QueryDistribution, n: int, rng_seed: int) -> np.ndarray:
    """Draw n i.i.d. keys from the distribution, rejecting excluded ones.

    Deterministic for fixed (dist, n, rng_seed).  Raises WorkloadError once
    REJECTION_BUDGET consecutive draws have been rejected, which is how an
    exclusion set that covers the whole support surfaces.
    """
    if n < 1:
        raise ParameterError("sample count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    exclusion = np.sort(np.fromiter(dist.exclusion, dtype=np.uint64, count=len(dist.exclusion)))
    out = np.empty(n, dtype=np.uint64)
    filled = 0
    consecutive = 0
    while filled < n:
        batch = int(min(max(1024, 2 * (n - filled)), 1_000_000))
        candidates = _draw(dist.source, rng, batch)
        if exclusion.size:
            accepted = ~np.isin(candidates, exclusion)
        else:
            accepted = np.ones(batch, dtype=bool)
        hits = np.flatnonzero(accepted)
        if hits.size == 0:
            consecutive += batch
            if consecutive >= REJECTION_BUDGET:
                raise WorkloadError(
                    f"exceeded {REJECTION_BUDGET} consecutive rejections; "
                    "the exclusion set may cover the support"
                )
            continue
        # Longest run of rejections, counting the carry from previous batches.
        gaps = np.diff(hits, prepend=-1) - 1
        gaps[0] += consecutive
        take = min(hits.size, n - filled)
        if int(gaps[:take].max()) >= REJECTION_BUDGET:
            raise WorkloadError(
                f"exceeded {REJECTION_BUDGET} consecutive rejections; "
                "the exclusion set may cover the support"
            )
        out[filled : filled + take] = candidates[hits[:take]]
        filled += take
        consecutive = batch - int(hits[-1]) - 1 if take == hits.size else 0
    return out


# ---------------------------------------------------------------------------
# The hot-range worked example.

UNIVERSE_SIZE = 1_000_000
HOT_LO = 1000
HOT_HI = 2000  # closed interval [1000, 2000]


@dataclass(frozen=True)
class HotRangeExample:
    """1000-key dataset over [0, 1000000): 500 keys in [1000, 2000], 500 outside."""

    keys_in_range: tuple[int, ...]
    keys_outside: tuple[int, ...]
    rng_seed: int
    universe_size: int = UNIVERSE_SIZE
    hot_lo: int = HOT_LO
    hot_hi: int = HOT_HI

    def __post_init__(self):
        combined = set(self.keys_in_range) | set(self.keys_outside)
        if len(combined) != len(self.keys_in_range) + len(self.keys_outside):
            raise ParameterError("example keys must be distinct")

    @property
    def keys(self) -> tuple[int, ...]:
        return self.keys_in_range + self.keys_outside

    @property
    def key_set(self) -> frozenset:
        return frozenset(self.keys)

    def full_range_queries(self) -> QueryDistribution:
        return uniform_queries(0, self.universe_size, self.key_set)

    def restricted_range_queries(self, hi: int = 100_000) -> QueryDistribution:
        return uniform_queries(0, hi, self.key_set)


def hot_range_example(seed: int) -> tuple[HotRangeExample, IntervalScorer, float]:
    """Build the worked example: dataset, its hand-set scorer, and threshold 0.4.

    The scorer returns 0.5 on the hot interval and 0 elsewhere, so with the
    0.4 threshold every in-range key clears the pre-filter and exactly the
    500 outside keys land in the backup filter.
    """
    rng = np.random.default_rng(seed)
    hot = np.arange(HOT_LO, HOT_HI + 1, dtype=np.uint64)
    in_range = np.sort(rng.choice(hot, size=500, replace=False))
    rest = np.concatenate(
        [np.arange(0, HOT_LO, dtype=np.uint64), np.arange(HOT_HI + 1, UNIVERSE_SIZE, dtype=np.uint64)]
    )
    outside = np.sort(rng.choice(rest, size=500, replace=False))
    example = HotRangeExample(
        keys_in_range=tuple(int(k) for k in in_range),
        keys_outside=tuple(int(k) for k in outside),
        rng_seed=seed,
    )
    scorer = IntervalScorer(((HOT_LO, HOT_HI),), inside_score=0.5, outside_score=0.0)
    return example, scorer, 0.4


# ---------------------------------------------------------------------------
# Dataset files: decimal text, length-prefixed binary, and key=value manifests.

_U64 = struct.Struct("<Q")
_U32 = struct.Struct("<I")


def save_keys_text(path, keys) -> None:
    """Newline-delimited decimal integers."""
    with open(path, "w", encoding="ascii") as fh:
        for key in keys:
            fh.write(f"{int(key)}\n")


def load_keys_text(path) -> list[int]:
    with open(path, "r", encoding="ascii") as fh:
        return [int(line) for line in fh if line.strip()]


def save_keys_binary(path, keys) -> None:
    """Length-prefixed byte-string keys: u64 count, then (u32 length, bytes) per key."""
    from .hashing import encode_key

    encoded = [encode_key(k) for k in keys]
    with open(path, "wb") as fh:
        fh.write(_U64.pack(len(encoded)))
        for item in encoded:
            fh.write(_U32.pack(len(item)))
            fh.write(item)


def load_keys_binary(path) -> list[bytes]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _U64.size:
        raise ParameterError("truncated binary key file")
    (count,) = _U64.unpack_from(data)
    keys = []
    offset = _U64.size
    for _ in range(count):
        if offset + _U32.size > len(data):
            raise ParameterError("truncated binary key file")
        (length,) = _U32.unpack_from(data, offset)
        offset += _U32.size
        if offset + length > len(data):
            raise ParameterError("truncated binary key file")
        keys.append(data[offset : offset + length])
        offset += length
    return keys


def write_manifest(path, entries: dict) -> None:
    """Reproducibility manifest: sorted key=value lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(entries):
            fh.write(f"{key}={entries[key]}\n")


def read_manifest(path) -> dict:
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            entries[key] = value
    return entries
