"""Key scorers: pre-filter functions mapping keys to [0, 1].

Two concrete families. Interval scorers return a fixed high score on a
union of disjoint closed integer intervals and a fixed low score
elsewhere. Logistic scorers apply a sigmoid to a linear function of a
named, deterministic feature encoding of the key, and are trained by
full-batch gradient descent on the clamped cross-entropy loss.

Scorers are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import hashlib
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import FilterFormatError, ParameterError, TrainingError
from .hashing import encode_key

LOG_CLAMP = 1e-9  # scores are clamped to [LOG_CLAMP, 1 - LOG_CLAMP] before logs
SCORE_FLOAT_BITS = 64  # accounting convention for each stored real
_BACKTRACK_FLOOR = 1e-30


class Scorer(ABC):
    """Deterministic, total map from keys to [0, 1] with a measurable bit size."""

    @abstractmethod
    def score(self, key) -> float:
        """Score a single key (int or bytes)."""

    def score_batch(self, keys) -> np.ndarray:
        """Scores for an array of integer keys. Default: scalar loop."""
        return np.array([self.score(int(k)) for k in np.asarray(keys).ravel()], dtype=np.float64)

    @abstractmethod
    def size_bits(self) -> int:
        """Representation size under the package's fixed accounting rules."""

    @abstractmethod
    def to_record(self) -> dict:
        """JSON-compatible tagged record; reals are hex-float strings."""


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    return int.from_bytes(encode_key(key), "little")


@dataclass(frozen=True)
class IntervalScorer(Scorer):
    """``inside_score`` on a union of disjoint closed integer intervals, ``outside_score`` elsewhere."""

    intervals: tuple[tuple[int, int], ...]
    inside_score: float
    outside_score: float

    def __post_init__(self):
        ivs = tuple((int(lo), int(hi)) for lo, hi in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for lo, hi in ivs:
            if lo > hi:
                raise ParameterError(f"empty interval [{lo}, {hi}]")
        for (_, b), (c, _) in zip(ivs, ivs[1:]):
            if c <= b:
                raise ParameterError("intervals must be sorted and pairwise disjoint")
        for name in ("inside_score", "outside_score"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if not self.inside_score > self.outside_score:
            raise ParameterError("inside_score must exceed outside_score")

    def score(self, key) -> float:
        x = _key_to_int(key)
        for lo, hi in self.intervals:
            if x < lo:
                break
            if x <= hi:
                return self.inside_score
        return self.outside_score

    def score_batch(self, keys) -> np.ndarray:
        x = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            if hi < 0 or lo >= 1 << 64:
                continue
            lo_b = np.uint64(max(lo, 0))
            hi_b = np.uint64(min(hi, (1 << 64) - 1))
            inside |= (x >= lo_b) & (x <= hi_b)
        return np.where(inside, self.inside_score, self.outside_score)

    def size_bits(self) -> int:
        # 128 bits per interval (two 64-bit bounds) + 128 for the two scores.
        return 128 * len(self.intervals) + 128

    def to_record(self) -> dict:
        return {
            "kind": "interval",
            "intervals": [[lo, hi] for lo, hi in self.intervals],
            "inside_score": float(self.inside_score).hex(),
            "outside_score": float(self.outside_score).hex(),
        }


# ---------------------------------------------------------------------------
# Feature maps: named deterministic key -> vector encodings.


class FeatureMap(ABC):
    """Named deterministic key -> feature-vector encoding."""

    name: str
    dim: int

    @abstractmethod
    def transform_one(self, key) -> np.ndarray: ...

    def transform(self, keys) -> np.ndarray:
        return np.stack([self.transform_one(k) for k in keys])


class _IntNorm(FeatureMap):
    """One feature: key / universe_max."""

    def __init__(self, universe_max: int):
        if universe_max < 1:
            raise ParameterError("int-norm universe_max must be >= 1")
        self.universe_max = universe_max
        self.name = f"int-norm:{universe_max}"
        self.dim = 1

    def transform_one(self, key) -> np.ndarray:
        return np.array([_key_to_int(key) / self.universe_max], dtype=np.float64)

    def transform(self, keys) -> np.ndarray:
        vals = np.array([_key_to_int(k) for k in keys], dtype=np.float64)
        return (vals / self.universe_max)[:, None]


class _IntCentered(FeatureMap):
    """One feature: 2 * key / universe_max - 1, so the ends of the universe map to -1 and +1."""

    def __init__(self, universe_max: int):
        if universe_max < 1:
            raise ParameterError("int-centered universe_max must be >= 1")
        self.universe_max = universe_max
        self.name = f"int-centered:{universe_max}"
        self.dim = 1

    def transform_one(self, key) -> np.ndarray:
        return np.array([2.0 * _key_to_int(key) / self.universe_max - 1.0], dtype=np.float64)

    def transform(self, keys) -> np.ndarray:
        vals = np.array([_key_to_int(k) for k in keys], dtype=np.float64)
        return (2.0 * vals / self.universe_max - 1.0)[:, None]


class _ByteNgram(FeatureMap):
    """Hashed byte-bigram counts over the canonical key encoding, normalized per key."""

    def __init__(self, buckets: int):
        if buckets < 1:
            raise ParameterError("byte-ngram bucket count must be >= 1")
        self.buckets = buckets
        self.name = f"byte-ngram:{buckets}"
        self.dim = buckets

    def _bucket(self, pair: bytes) -> int:
        digest = hashlib.blake2b(pair, digest_size=8, key=b"lbf-ngram").digest()
        return int.from_bytes(digest, "little") % self.buckets

    def transform_one(self, key) -> np.ndarray:
        data = encode_key(key)
        out = np.zeros(self.buckets, dtype=np.float64)
        pairs = max(len(data) - 1, 0)
        for i in range(pairs):
            out[self._bucket(data[i : i + 2])] += 1.0
        if pairs:
            out /= pairs
        return out


def feature_map(name: str) -> FeatureMap:
    """Resolve a feature-map name like ``int-norm:1000000`` or ``byte-ngram:16``."""
    family, _, arg = name.partition(":")
    if not arg:
        raise ParameterError(f"feature map {name!r} is missing its parameter")
    try:
        value = int(arg)
    except ValueError as exc:
        raise ParameterError(f"feature map parameter {arg!r} is not an integer") from exc
    if family == "int-norm":
        return _IntNorm(value)
    if family == "int-centered":
        return _IntCentered(value)
    if family == "byte-ngram":
        return _ByteNgram(value)
    raise ParameterError(f"unknown feature map family {family!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LogisticScorer(Scorer):
    """sigmoid(weights . features(key) + bias) over a named feature encoding."""

    weights: tuple[float, ...]
    bias: float
    feature_map: str

    def __post_init__(self):
        ws = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        if not all(math.isfinite(w) for w in ws) or not math.isfinite(self.bias):
            raise ParameterError("logistic weights and bias must be finite")
        fm = feature_map(self.feature_map)
        if fm.dim != len(ws):
            raise ParameterError(
                f"feature map {fm.name} has dim {fm.dim}, got {len(ws)} weights"
            )
        object.__setattr__(self, "_fm", fm)
        object.__setattr__(self, "_w", np.array(ws, dtype=np.float64))

    def score(self, key) -> float:
        phi = self._fm.transform_one(key)
        return float(_sigmoid(np.atleast_1d(phi @ self._w + self.bias))[0])

    def score_batch(self, keys) -> np.ndarray:
        x = self._fm.transform(np.atleast_1d(np.asarray(keys)))
        return _sigmoid(x @ self._w + self.bias)

    def size_bits(self) -> int:
        # 64 bits per weight + 64 for the bias; the feature-map name is free.
        return SCORE_FLOAT_BITS * len(self.weights) + SCORE_FLOAT_BITS

    def to_record(self) -> dict:
        return {
            "kind": "logistic",
            "weights": [float(w).hex() for w in self.weights],
            "bias": float(self.bias).hex(),
            "feature_map": self.feature_map,
        }


@dataclass(frozen=True)
class TrainingSet:
    """Labeled keys: members of the set (positives) and known non-members (negatives)."""

    positives: tuple
    negatives: tuple
    disjoint_checked: bool = True

    def __init__(self, positives, negatives, check_disjoint: bool = True):
        object.__setattr__(self, "positives", tuple(positives))
        object.__setattr__(self, "negatives", tuple(negatives))
        object.__setattr__(self, "disjoint_checked", bool(check_disjoint))
        if not self.positives:
            raise ParameterError("training set needs at least one positive key")
        if check_disjoint:
            pos = {encode_key(k) for k in self.positives}
            if any(encode_key(k) in pos for k in self.negatives):
                raise ParameterError("positives and negatives must be disjoint")

    def __len__(self) -> int:
        return len(self.positives) + len(self.negatives)


def _scores_for(scorer: Scorer, keys) -> np.ndarray:
    if len(keys) == 0:
        return np.zeros(0, dtype=np.float64)
    if all(isinstance(k, (int, np.integer)) for k in keys):
        return scorer.score_batch(np.array(keys, dtype=np.uint64))
    return np.array([scorer.score(k) for k in keys], dtype=np.float64)


def _clamped_xent(p_pos: np.ndarray, p_neg: np.ndarray) -> float:
    lo, hi = LOG_CLAMP, 1.0 - LOG_CLAMP
    loss = -np.log(np.clip(p_pos, lo, hi)).sum()
    loss -= np.log1p(-np.clip(p_neg, lo, hi)).sum()
    return float(loss)


def log_loss(scorer: Scorer, data: TrainingSet) -> float:
    """Clamped cross-entropy of the scorer on the labeled keys (lower is better).

    Scores are clamped to [1e-9, 1 - 1e-9] before logs so a hard 0/1 score
    cannot produce an infinite loss.
    """
    if len(data) == 0:
        raise ParameterError("training set is empty")
    return _clamped_xent(
        _scores_for(scorer, data.positives), _scores_for(scorer, data.negatives)
    )


def train_logistic(
    data: TrainingSet,
    feature_map_name: str,
    epochs: int,
    learning_rate: float,
    rng_seed: int = 0,
    loss_trace: list | None = None,
) -> LogisticScorer:
    """Full-batch gradient descent from zero weights with step backtracking.

    Each epoch takes one gradient step; if the step would increase the loss it
    is halved until the loss is non-increasing (or the step underflows, which
    freezes the weights).  The trainer is fully deterministic: zero
    initialization and whole-batch updates leave nothing to chance, and
    ``rng_seed`` is accepted for interface stability.  When ``loss_trace`` is
    a list, the loss before training and after each epoch is appended to it.
    """
    if epochs < 0:
        raise ParameterError("epochs must be >= 0")
    if not learning_rate > 0:
        raise ParameterError("learning_rate must be positive")
    del rng_seed
    fm = feature_map(feature_map_name)
    keys = list(data.positives) + list(data.negatives)
    x = fm.transform(keys)
    y = np.concatenate([np.ones(len(data.positives)), np.zeros(len(data.negatives))])

    def loss_at(w: np.ndarray, b: float) -> float:
        p = _sigmoid(x @ w + b)
        return _clamped_xent(p[y == 1.0], p[y == 0.0])

    w = np.zeros(fm.dim, dtype=np.float64)
    b = 0.0
    loss = loss_at(w, b)
    if loss_trace is not None:
        loss_trace.append(loss)
    for epoch in range(epochs):
        p = _sigmoid(x @ w + b)
        grad_w = x.T @ (p - y)
        grad_b = float((p - y).sum())
        if not (np.all(np.isfinite(grad_w)) and math.isfinite(grad_b) and math.isfinite(loss)):
            raise TrainingError(f"non-finite loss or gradient at epoch {epoch}", epoch=epoch)
        step = learning_rate
        while step > _BACKTRACK_FLOOR:
            cand_w = w - step * grad_w
            cand_b = b - step * grad_b
            cand_loss = loss_at(cand_w, cand_b)
            if math.isfinite(cand_loss) and cand_loss <= loss:
                w, b, loss = cand_w, cand_b, cand_loss
                break
            step *= 0.5
        if loss_trace is not None:
            loss_trace.append(loss)
    return LogisticScorer(weights=tuple(float(v) for v in w), bias=b, feature_map=fm.name)


def log_loss_gradient(
    weights: np.ndarray, bias: float, fm: FeatureMap, data: TrainingSet
) -> tuple[np.ndarray, float]:
    """Analytic gradient of the clamped cross-entropy at (weights, bias)."""
    keys = list(data.positives) + list(data.negatives)
    x = fm.transform(keys)
    y = np.concatenate([np.ones(len(data.positives)), np.zeros(len(data.negatives))])
    p = _sigmoid(x @ np.asarray(weights, dtype=np.float64) + bias)
    return x.T @ (p - y), float((p - y).sum())


# ---------------------------------------------------------------------------
# Serialization: tagged text records with hex-float reals for exact round trips.


def scorer_to_text(scorer: Scorer) -> str:
    return json.dumps(scorer.to_record(), sort_keys=True)


def scorer_from_record(record: dict) -> Scorer:
    try:
        kind = record["kind"]
        if kind == "interval":
            return IntervalScorer(
                intervals=tuple((int(lo), int(hi)) for lo, hi in record["intervals"]),
                inside_score=float.fromhex(record["inside_score"]),
                outside_score=float.fromhex(record["outside_score"]),
            )
        if kind == "logistic":
            return LogisticScorer(
                weights=tuple(float.fromhex(w) for w in record["weights"]),
                bias=float.fromhex(record["bias"]),
                feature_map=record["feature_map"],
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise FilterFormatError(f"malformed scorer record: {exc}") from exc
    raise FilterFormatError(f"unknown scorer kind {record.get('kind')!r}")


def scorer_from_text(text: str) -> Scorer:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FilterFormatError(f"scorer record is not valid JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise FilterFormatError("scorer record must be a JSON object")
    return scorer_from_record(record)
