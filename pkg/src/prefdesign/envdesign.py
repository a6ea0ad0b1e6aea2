"""Designing the environment that will host the next query.

A Gaussian process with a Matern-5/2 kernel (one length scale per theta
dimension) models how information gain varies over the design space. Each
iteration of `run_environment_design` picks a theta, either at random during
warmup or by maximizing an upper confidence bound, instantiates the
environment, synthesizes the best query inside it, and feeds the achieved
gain back into the surrogate. The final answer is the best environment and
query seen, not the surrogate's guess.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .counterfactual import counterfactual_query
from .domains import DomainSpec, instantiate
from .errors import (
    DegenerateDesignError,
    DegenerateQueryError,
    IllConditionedModelError,
    InvalidArgumentError,
)
from .seeding import derive_seed

_SQRT5 = np.sqrt(5.0)
_JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
_NOISE_VARIANCE = 1e-4
_LENGTH_FACTORS = (0.05, 0.1, 0.2, 0.5, 1.0)
_SIGNAL_FACTORS = (0.25, 1.0, 4.0)
_DEFAULT_LENGTH_FACTOR = 0.2
_N_PROBES = 256
_REFINE_ROUNDS = 20


@dataclass(frozen=True, eq=False)
class GPModel:
    """Gaussian process regression state: data plus kernel hyperparameters."""

    inputs: np.ndarray
    observations: np.ndarray
    length_scales: np.ndarray
    signal_variance: float
    noise_variance: float = _NOISE_VARIANCE

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        if x.size == 0:
            x = x.reshape(0, max(1, x.shape[-1] if x.ndim == 2 else 1))
        y = np.asarray(self.observations, dtype=np.float64).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise InvalidArgumentError(
                f"{x.shape[0]} inputs vs {y.shape[0]} observations"
            )
        ls = np.asarray(self.length_scales, dtype=np.float64).reshape(-1)
        if np.any(ls <= 0) or not np.all(np.isfinite(ls)):
            raise InvalidArgumentError("length scales must be positive and finite")
        if x.shape[0] > 0 and x.shape[1] != ls.shape[0]:
            raise InvalidArgumentError("length scales must match input dimension")
        if not (np.isfinite(self.signal_variance) and self.signal_variance > 0):
            raise InvalidArgumentError("signal variance must be positive")
        if not (np.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise InvalidArgumentError("noise variance must be positive")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "observations", y)
        object.__setattr__(self, "length_scales", ls)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


def _matern52(a: np.ndarray, b: np.ndarray, length_scales, signal_variance) -> np.ndarray:
    diff = (a[:, None, :] - b[None, :, :]) / length_scales
    r = _SQRT5 * np.sqrt(np.sum(diff * diff, axis=-1))
    return signal_variance * (1.0 + r + r * r / 3.0) * np.exp(-r)


def _factorize(model: GPModel) -> np.ndarray:
    gram = _matern52(model.inputs, model.inputs, model.length_scales, model.signal_variance)
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(
                gram + (model.noise_variance + jitter) * np.eye(model.n)
            )
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedModelError(
        "kernel matrix is not positive definite even with jitter; "
        "observations may be duplicated at the same input"
    )


def _weights_from(chol: np.ndarray, observations: np.ndarray) -> np.ndarray:
    return np.linalg.solve(chol.T, np.linalg.solve(chol, observations))


def _posterior_batch(model: GPModel, queries: np.ndarray, chol=None, alpha=None):
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if model.n == 0:
        std = np.full(queries.shape[0], np.sqrt(model.signal_variance))
        return np.zeros(queries.shape[0]), std
    if chol is None:
        chol = _factorize(model)
    if alpha is None:
        alpha = _weights_from(chol, model.observations)
    cross = _matern52(model.inputs, queries, model.length_scales, model.signal_variance)
    tmp = np.linalg.solve(chol, cross)
    mean = cross.T @ alpha
    var = model.signal_variance - np.sum(tmp * tmp, axis=0)
    return mean, np.sqrt(np.maximum(var, 0.0))


def gp_posterior(model: GPModel, theta) -> tuple[float, float]:
    """Posterior mean and standard deviation at a single theta."""
    theta = np.asarray(theta, dtype=np.float64).reshape(1, -1)
    if model.n > 0 and theta.shape[1] != model.inputs.shape[1]:
        raise InvalidArgumentError("theta dimension does not match the model inputs")
    mean, std = _posterior_batch(model, theta)
    return float(mean[0]), float(std[0])


def ucb(model: GPModel, theta, kappa: float) -> float:
    """Upper confidence bound mean + kappa * std at theta."""
    if not (np.isfinite(kappa) and kappa >= 0):
        raise InvalidArgumentError(f"kappa must be non-negative, got {kappa!r}")
    mean, std = gp_posterior(model, theta)
    return mean + kappa * std


def fit_gp(inputs, observations, bounds) -> GPModel:
    """Fit kernel hyperparameters by grid search over marginal likelihood.

    Candidate length scales are fixed fractions of the box widths (shared
    across dimensions), candidate signal variances are multiples of the
    observed variance, and the noise floor is fixed. With fewer than two
    observations there is nothing to fit and mid-grid defaults are used.
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    widths = bounds[:, 1] - bounds[:, 0]
    if np.any(widths <= 0):
        raise InvalidArgumentError("bounds must have positive width for fitting")
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.asarray(observations, dtype=np.float64).reshape(-1)
    if x.size == 0:
        x = np.zeros((0, bounds.shape[0]))

    if x.shape[0] < 2:
        return GPModel(
            inputs=x,
            observations=y,
            length_scales=_DEFAULT_LENGTH_FACTOR * widths,
            signal_variance=1.0,
        )

    # Keep the signal scale well above the noise floor even when every
    # observation so far is identical (e.g. all-degenerate gains), otherwise
    # observing a point barely reduces its uncertainty and UCB exploration
    # stalls on a single maximizer.
    y_var = max(float(np.var(y)), 1e-2)
    best_model = None
    best_score = -np.inf
    for lf in _LENGTH_FACTORS:
        for sf in _SIGNAL_FACTORS:
            model = GPModel(
                inputs=x,
                observations=y,
                length_scales=lf * widths,
                signal_variance=sf * y_var,
            )
            try:
                chol = _factorize(model)
            except IllConditionedModelError:
                continue
            half = np.linalg.solve(chol, y)
            score = -0.5 * float(half @ half) - float(np.sum(np.log(np.diag(chol))))
            if score > best_score:
                best_score = score
                best_model = model
    if best_model is None:
        raise IllConditionedModelError("no hyperparameter candidate was factorizable")
    return best_model


def propose_next(model: GPModel, bounds, kappa: float, seed: int = 0) -> np.ndarray:
    """Maximize the acquisition over the box: random probes, then local refinement.

    256 seeded uniform probes find the basin; coordinate-wise halving steps
    polish the best probe. Deterministic given the seed, and ties among
    probes keep the earliest one.
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] < 1:
        raise InvalidArgumentError(f"bounds must be (n, 2), got {bounds.shape}")
    if not np.all(np.isfinite(bounds)) or np.any(bounds[:, 0] > bounds[:, 1]):
        raise InvalidArgumentError("bounds rows must be finite [lo, hi] with lo <= hi")
    if not (np.isfinite(kappa) and kappa >= 0):
        raise InvalidArgumentError(f"kappa must be non-negative, got {kappa!r}")
    lo, hi = bounds[:, 0], bounds[:, 1]

    chol = _factorize(model) if model.n > 0 else None
    alpha = _weights_from(chol, model.observations) if chol is not None else None

    def acquisition(points):
        mean, std = _posterior_batch(model, points, chol=chol, alpha=alpha)
        return mean + kappa * std

    rng = np.random.default_rng(seed)
    probes = lo + rng.random((_N_PROBES, bounds.shape[0])) * (hi - lo)
    values = acquisition(probes)
    best = probes[int(np.argmax(values))].copy()
    best_value = float(np.max(values))

    step = (hi - lo) / 4.0
    for _ in range(_REFINE_ROUNDS):
        for dim in range(bounds.shape[0]):
            for sign in (1.0, -1.0):
                candidate = best.copy()
                candidate[dim] = min(max(candidate[dim] + sign * step[dim], lo[dim]), hi[dim])
                value = float(acquisition(candidate[None, :])[0])
                if value > best_value:
                    best, best_value = candidate, value
        step = step / 2.0
    return best


@dataclass(frozen=True)
class DesignIteration:
    theta: np.ndarray
    gain: float
    degenerate: bool

    def to_payload(self) -> dict:
        return {
            "theta": np.asarray(self.theta).tolist(),
            "gain": self.gain,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class DesignResult:
    theta: np.ndarray
    pair: object
    gain: float
    trace: tuple[DesignIteration, ...] = field(repr=False)

    def trace_payload(self) -> list[dict]:
        return [it.to_payload() for it in self.trace]


@dataclass(frozen=True)
class DesignBudget:
    """How many environments to try and how to trade exploration for greed."""

    total_evals: int = 15
    init_random: int = 5
    kappa: float = 2.576

    def __post_init__(self):
        if self.total_evals < 1:
            raise InvalidArgumentError(f"total_evals must be positive, got {self.total_evals}")
        if not 1 <= self.init_random <= self.total_evals:
            raise InvalidArgumentError(
                f"init_random must be in [1, total_evals], got {self.init_random}"
            )
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise InvalidArgumentError(f"kappa must be non-negative, got {self.kappa!r}")


def run_environment_design(
    belief,
    spec: DomainSpec,
    budget: DesignBudget,
    seed: int = 0,
    n: int = 50,
    m: int = 8,
    rationality: float = 1.0,
    inner=None,
):
    """Search the design space for the environment hosting the best query.

    `inner` maps (belief, environment, seed) to a scored pair and defaults to
    counterfactual synthesis. Environments whose inner call degenerates are
    recorded with zero gain, keeping the surrogate aware of dead regions but
    never winning. Per-iteration randomness is derived from (seed, iteration)
    alone, so extending the budget leaves earlier iterations unchanged.
    """
    if inner is None:
        def inner(b, env, s):
            return counterfactual_query(b, env, n=n, m=m, seed=s, rationality=rationality)

    bounds = spec.theta_bounds
    lo, hi = bounds[:, 0], bounds[:, 1]
    thetas: list[np.ndarray] = []
    gains: list[float] = []
    trace: list[DesignIteration] = []
    best = None

    for t in range(budget.total_evals):
        iter_seed = derive_seed(seed, "design", t)
        if t < budget.init_random:
            rng = np.random.default_rng(iter_seed)
            theta = lo + rng.random(bounds.shape[0]) * (hi - lo)
        else:
            model = fit_gp(np.stack(thetas), np.array(gains), bounds)
            theta = propose_next(model, bounds, budget.kappa, seed=iter_seed)

        env = instantiate(spec, theta, spec.geometry_seed)
        try:
            pair, gain = inner(belief, env, derive_seed(seed, "query", t))
            degenerate = False
        except DegenerateQueryError:
            pair, gain = None, 0.0
            degenerate = True

        thetas.append(theta)
        gains.append(gain)
        trace.append(DesignIteration(theta=theta, gain=gain, degenerate=degenerate))
        if not degenerate and (best is None or gain > best[2]):
            best = (theta, pair, gain)

    if best is None:
        raise DegenerateDesignError("every environment tried produced a degenerate query")
    return DesignResult(theta=best[0], pair=best[1], gain=best[2], trace=tuple(trace))
