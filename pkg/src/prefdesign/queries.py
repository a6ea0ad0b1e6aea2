"""Scoring candidate comparisons by expected information gain.

A query shows two trajectories and asks which one the person prefers. Its
value to the learner is the mutual information between the answer and the
weight vector, estimated from belief samples: with answer probabilities
p_k = P(answer | w_k) for each sampled weight w_k,

    gain = (1/K) sum_k sum_answers p_k log2( K p_k / sum_k' p_k' )

measured in bits. For a binary comparison this lies in [0, 1]: zero when
every sampled weight predicts the same answer distribution, one bit when
half the samples are certain of one answer and half of the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .belief import BeliefSamples, _as_vector
from .errors import InvalidArgumentError

if TYPE_CHECKING:
    from .domains import Trajectory

_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class CandidatePair:
    """A proposed comparison between two feature vectors.

    The trajectories behind the features travel along for rendering and
    provenance; they play no role in scoring.
    """

    features_a: np.ndarray
    features_b: np.ndarray
    provenance: str = ""
    trajectory_a: Optional["Trajectory"] = None
    trajectory_b: Optional["Trajectory"] = None
    gain_bits: float | None = None

    def __post_init__(self):
        a = _as_vector(self.features_a, name="features_a")
        b = _as_vector(self.features_b, d=a.shape[0], name="features_b")
        object.__setattr__(self, "features_a", a)
        object.__setattr__(self, "features_b", b)

    @property
    def dim(self) -> int:
        return self.features_a.shape[0]


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _binary_mutual_information(p: np.ndarray) -> float:
    """Monte Carlo mutual information for per-sample answer probabilities p."""
    k = p.shape[0]
    q = 1.0 - p
    sum_p = max(float(p.sum()), _LOG_FLOOR)
    sum_q = max(float(q.sum()), _LOG_FLOOR)
    gain = float(
        np.sum(p * np.log2(k * np.maximum(p, _LOG_FLOOR) / sum_p))
        + np.sum(q * np.log2(k * np.maximum(q, _LOG_FLOOR) / sum_q))
    ) / k
    return gain


def _check_rationality(rationality: float) -> float:
    if not (np.isfinite(rationality) and rationality > 0):
        raise InvalidArgumentError(f"rationality must be positive, got {rationality!r}")
    return float(rationality)


def info_gain(pair: CandidatePair, belief: BeliefSamples, rationality: float = 1.0) -> float:
    """Expected information gain of asking `pair`, in bits.

    `rationality` is the inverse temperature of the answer model the learner
    attributes to the person; it must match what posterior updates will use
    for the gain to mean what it claims.
    """
    beta = _check_rationality(rationality)
    if belief.k < 2:
        raise InvalidArgumentError("info gain needs at least two belief samples")
    if belief.d != pair.dim:
        raise InvalidArgumentError(
            f"pair dimension {pair.dim} does not match belief dimension {belief.d}"
        )
    gaps = belief.samples @ (pair.features_a - pair.features_b)
    return _binary_mutual_information(_sigmoid(beta * gaps))


def best_pair(candidates, belief: BeliefSamples, rationality: float = 1.0):
    """Exhaustively score all pairs of candidate feature vectors.

    Returns ((i, j), gain) for the highest-gain pair, ties broken toward the
    earliest pair in lexicographic index order.
    """
    beta = _check_rationality(rationality)
    feats = [
        _as_vector(c, d=belief.d, name=f"candidates[{i}]") for i, c in enumerate(candidates)
    ]
    m = len(feats)
    if m < 2:
        raise InvalidArgumentError("best_pair needs at least two candidates")
    if belief.k < 2:
        raise InvalidArgumentError("best_pair needs at least two belief samples")
    utilities = belief.samples @ np.stack(feats).T
    best_idx = None
    best_gain = -np.inf
    for i in range(m):
        for j in range(i + 1, m):
            gain = _binary_mutual_information(_sigmoid(beta * (utilities[:, i] - utilities[:, j])))
            if gain > best_gain:
                best_gain = gain
                best_idx = (i, j)
    return best_idx, best_gain
