"""Bayesian belief over linear reward weights.

The reward model is R(xi) = w . Phi(xi) with the weight vector constrained to
the unit ball. A person answering a comparison between options A and B picks
A with probability

    P(A) = exp(beta * w.Phi_A) / (exp(beta * w.Phi_A) + exp(beta * w.Phi_B))

which reduces to a logistic in the feature gap. The posterior over w given a
set of answered comparisons is sampled with an adaptive Metropolis chain:
isotropic Gaussian proposals at first, then proposals shaped by the scaled
empirical covariance of the chain history (Haario-style adaptation). Proposals
leaving the unit ball are rejected rather than projected, which together with
the flat in-ball prior makes the no-data posterior exactly uniform on the
ball.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidArgumentError, SamplerDegenerateError

UNIT_BALL_TOL = 1e-9

# Proposal scaling from Haario et al.'s adaptive Metropolis: 2.38^2 / d times
# the empirical covariance is asymptotically optimal for Gaussian targets.
_ADAPT_SCALE = 2.38**2
_COV_JITTER = 1e-6
_INIT_PROPOSAL_STD = 0.1


def _as_vector(x, d: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must be non-empty")
    if d is not None and arr.shape[0] != d:
        raise InvalidArgumentError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class PreferenceRecord:
    """One answered comparison.

    `choice` is +1 if the option with features `features_a` was preferred and
    -1 if the other one was. `rationality` is the inverse-temperature of the
    answer model; larger values mean more reliable answers.
    """

    features_a: np.ndarray
    features_b: np.ndarray
    choice: int
    rationality: float = 1.0

    def __post_init__(self):
        a = _as_vector(self.features_a, name="features_a")
        b = _as_vector(self.features_b, d=a.shape[0], name="features_b")
        if self.choice not in (1, -1):
            raise InvalidArgumentError(f"choice must be +1 or -1, got {self.choice!r}")
        if not (np.isfinite(self.rationality) and self.rationality > 0):
            raise InvalidArgumentError(f"rationality must be positive, got {self.rationality!r}")
        object.__setattr__(self, "features_a", a)
        object.__setattr__(self, "features_b", b)

    @property
    def dim(self) -> int:
        return self.features_a.shape[0]


def _log_sigmoid(t: float) -> float:
    if t >= 0.0:
        return -np.log1p(np.exp(-t))
    return t - np.log1p(np.exp(t))


def preference_likelihood(record: PreferenceRecord, weights) -> float:
    """Probability of the recorded choice under the given weight vector."""
    w = _as_vector(weights, d=record.dim, name="weights")
    gap = float(np.dot(w, record.features_a - record.features_b))
    return float(np.exp(_log_sigmoid(record.choice * record.rationality * gap)))


def log_unnormalized_posterior(weights, records) -> float:
    """Log of prior times likelihood, up to a constant.

    The prior is uniform on the unit ball, so the value is -inf outside the
    ball and the sum of per-record log likelihoods inside it.
    """
    w = _as_vector(weights, name="weights")
    if float(np.linalg.norm(w)) > 1.0 + UNIT_BALL_TOL:
        return -np.inf
    total = 0.0
    for record in records:
        if record.dim != w.shape[0]:
            raise InvalidArgumentError(
                f"record dimension {record.dim} does not match weights dimension {w.shape[0]}"
            )
        gap = float(np.dot(w, record.features_a - record.features_b))
        total += _log_sigmoid(record.choice * record.rationality * gap)
    return total


@dataclass(frozen=True)
class BeliefSamples:
    """A posterior represented by Metropolis samples.

    `samples` has one weight vector per row, all inside the unit ball.
    """

    samples: np.ndarray
    acceptance_rate: float
    seed: int
    records: tuple[PreferenceRecord, ...] = field(default=(), repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"samples must be a non-empty 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("samples contain non-finite entries")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(norms > 1.0 + UNIT_BALL_TOL):
            raise InvalidArgumentError("samples must lie inside the unit ball")
        if not (0.0 < self.acceptance_rate <= 1.0):
            raise InvalidArgumentError(
                f"acceptance_rate must be in (0, 1], got {self.acceptance_rate!r}"
            )
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def k(self) -> int:
        return self.samples.shape[0]

    def to_json(self) -> str:
        payload = {
            "d": self.d,
            "seed": self.seed,
            "acceptance_rate": self.acceptance_rate,
            "samples": self.samples.tolist(),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "BeliefSamples":
        payload = json.loads(text)
        samples = np.asarray(payload["samples"], dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != payload["d"]:
            raise InvalidArgumentError("serialized samples do not match the declared dimension")
        return cls(
            samples=samples,
            acceptance_rate=float(payload["acceptance_rate"]),
            seed=int(payload["seed"]),
        )


@njit(cache=True)
def _choice_loglik(D, x):
    # D holds one row per record: choice * rationality * (features_a - features_b),
    # so the record's log likelihood is log sigmoid(D[i] . x).
    total = 0.0
    for i in range(D.shape[0]):
        t = 0.0
        for j in range(D.shape[1]):
            t += D[i, j] * x[j]
        if t >= 0.0:
            total += -np.log1p(np.exp(-t))
        else:
            total += t - np.log1p(np.exp(t))
    return total


@njit(cache=True)
def _run_chain(D, Z, U, burn_in, adapt_start, init_std, cov_scale, jitter, ball_tol):
    steps, d = Z.shape
    chain = np.empty((steps, d))
    x = np.zeros(d)
    log_post = _choice_loglik(D, x)

    # Running mean and scatter of the chain history (Welford).
    mean = np.zeros(d)
    scatter = np.zeros((d, d))
    count = 0

    chol = np.eye(d) * init_std
    accepted_post = 0

    for t in range(steps):
        if t >= adapt_start and count >= 2:
            cov = scatter / (count - 1) * cov_scale
            for i in range(d):
                cov[i, i] += jitter
            chol = np.linalg.cholesky(cov)

        prop = x + chol @ Z[t]
        nrm = 0.0
        for j in range(d):
            nrm += prop[j] * prop[j]
        if np.sqrt(nrm) > 1.0 + ball_tol:
            log_post_prop = -np.inf
        else:
            log_post_prop = _choice_loglik(D, prop)

        if np.log(U[t]) < log_post_prop - log_post:
            x = prop
            log_post = log_post_prop
            if t >= burn_in:
                accepted_post += 1

        chain[t] = x

        count += 1
        delta = x - mean
        mean = mean + delta / count
        delta2 = x - mean
        for i in range(d):
            for j in range(d):
                scatter[i, j] += delta[i] * delta2[j]

    return chain, accepted_post


def sample_posterior(
    records,
    d: int,
    k: int,
    burn_in: int | None = None,
    seed: int = 0,
    steps: int | None = None,
) -> BeliefSamples:
    """Draw `k` thinned posterior samples with an adaptive Metropolis chain.

    The chain starts at the origin, runs for `steps` iterations (default
    `burn_in + 2 * k`), discards the first `burn_in` (default `k // 2`, i.e.
    twenty percent of the default-length chain), and keeps every stride-th
    state of the remainder where stride = (steps - burn_in) // k.

    Raises SamplerDegenerateError if no proposal was accepted after burn-in,
    since the "samples" would then be k copies of a single stuck state.
    """
    if d < 1:
        raise InvalidArgumentError(f"d must be at least 1, got {d}")
    if k < 1:
        raise InvalidArgumentError(f"k must be at least 1, got {k}")
    if burn_in is None:
        burn_in = k // 2
    if burn_in < 0:
        raise InvalidArgumentError(f"burn_in must be non-negative, got {burn_in}")
    if steps is None:
        steps = burn_in + 2 * k
    if steps - burn_in < k:
        raise InvalidArgumentError(
            f"need at least k={k} post-burn-in steps, got {steps - burn_in}"
        )

    records = tuple(records)
    for record in records:
        if record.dim != d:
            raise InvalidArgumentError(
                f"record dimension {record.dim} does not match d={d}"
            )
    if records:
        D = np.stack(
            [r.choice * r.rationality * (r.features_a - r.features_b) for r in records]
        )
    else:
        D = np.zeros((0, d))

    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((steps, d))
    U = rng.random(steps)

    adapt_start = max(1000, 10 * d)
    chain, accepted_post = _run_chain(
        D, Z, U, burn_in, adapt_start, _INIT_PROPOSAL_STD, _ADAPT_SCALE / d,
        _COV_JITTER, UNIT_BALL_TOL,
    )

    post = chain[burn_in:]
    if accepted_post == 0:
        raise SamplerDegenerateError(
            "no proposal accepted after burn-in; the posterior may be too peaked "
            "for the proposal scale"
        )
    stride = post.shape[0] // k
    kept = post[stride - 1 :: stride][:k]
    rate = accepted_post / post.shape[0]
    return BeliefSamples(samples=kept.copy(), acceptance_rate=rate, seed=seed, records=records)


def posterior_mean(belief: BeliefSamples) -> np.ndarray:
    """Mean of the belief samples, pulled back to the unit sphere if outside."""
    m = belief.samples.mean(axis=0)
    norm = float(np.linalg.norm(m))
    if norm > 1.0:
        m = m / norm
    return m
