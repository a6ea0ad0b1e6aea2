"""Batch evaluation: simulated users, the reward-correlation metric, and a
method-comparison runner.

A simulated user holds a hidden unit-norm weight vector and answers queries
through the same noisy-choice model the learner assumes. The runner plays
every configured method against every user for several seeds, scores the
posterior mean after each round by Pearson correlation of predicted rewards
over a shared feature sample, and writes a flat CSV plus an aggregate JSON
summary.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .belief import (
    PreferenceRecord,
    posterior_mean,
    preference_likelihood,
    sample_posterior,
)
from .domains import DomainSpec, features, instantiate, random_rollout
from .errors import (
    InvalidArgumentError,
    PrefdesignError,
    SamplerDegenerateError,
    UndefinedCorrelationError,
)
from .learners import METHODS, LearnerConfig, run_episode
from .queries import CandidatePair
from .seeding import derive_seed

_KMEANS_ITERATIONS = 50
_KMEANS_RETRIES = 5

# Hand-picked ground-truth profiles for demo sessions, unit-normalized below.
# The gridnav profile dislikes long paths and hates asphalt; the tabletop
# profile mostly wants to stay away from electronics.
PRESET_GRIDNAV_WEIGHTS = np.array([-1.0, -0.1, -2.0, -5.0, -0.1])
PRESET_GRIDNAV_WEIGHTS = PRESET_GRIDNAV_WEIGHTS / np.linalg.norm(PRESET_GRIDNAV_WEIGHTS)
PRESET_TABLETOP_WEIGHTS = np.array([-0.1, -0.1, -2.0, -1.0])
PRESET_TABLETOP_WEIGHTS = PRESET_TABLETOP_WEIGHTS / np.linalg.norm(PRESET_TABLETOP_WEIGHTS)

_UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SimulatedUser:
    """A stand-in participant with a hidden reward function."""

    true_weights: np.ndarray
    rationality: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.true_weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1 or not np.all(np.isfinite(w)):
            raise InvalidArgumentError("true_weights must be a finite 1-d vector")
        if abs(float(np.linalg.norm(w)) - 1.0) > _UNIT_NORM_TOL:
            raise InvalidArgumentError("true_weights must have unit norm")
        if not (np.isfinite(self.rationality) and self.rationality > 0):
            raise InvalidArgumentError(
                f"rationality must be positive, got {self.rationality}"
            )
        object.__setattr__(self, "true_weights", w)

    @property
    def d(self) -> int:
        return self.true_weights.shape[0]


def _sphere_points(rng: np.random.Generator, pool: int, d: int) -> np.ndarray | None:
    raw = rng.standard_normal((pool, d))
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms < 1e-12):
        return None
    return raw / norms[:, None]


def _first_distinct(points: np.ndarray, n: int) -> np.ndarray | None:
    chosen: list[np.ndarray] = []
    for p in points:
        if all(not np.array_equal(p, c) for c in chosen):
            chosen.append(p)
        if len(chosen) == n:
            return np.array(chosen)
    return None


def _lloyd(points: np.ndarray, centers: np.ndarray) -> np.ndarray | None:
    """Plain k-means iterations; None signals an emptied cluster."""
    n = centers.shape[0]
    for _ in range(_KMEANS_ITERATIONS):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        counts = np.bincount(assign, minlength=n)
        if np.any(counts == 0):
            return None
        updated = np.zeros_like(centers)
        np.add.at(updated, assign, points)
        updated /= counts[:, None]
        if np.array_equal(updated, centers):
            break
        centers = updated
    return centers


def make_simulated_users(
    n: int = 10,
    pool: int = 1000,
    d: int = 5,
    seed: int = 0,
    rationality: float = 1.0,
) -> list[SimulatedUser]:
    """Cluster a sphere sample into n representative unit-norm users.

    K-means over `pool` uniformly random directions, initialized from the
    first n distinct sample points; the final cluster means are pulled back
    onto the sphere. An emptied cluster triggers a re-seeded retry.
    """
    if n < 1 or pool < n:
        raise InvalidArgumentError(f"need pool >= n >= 1, got n={n}, pool={pool}")
    if d < 1:
        raise InvalidArgumentError(f"d must be positive, got {d}")
    for attempt in range(_KMEANS_RETRIES):
        rng = np.random.default_rng(derive_seed(seed, "users", attempt))
        points = _sphere_points(rng, pool, d)
        if points is None:
            continue
        init = _first_distinct(points, n)
        if init is None:
            continue
        centers = _lloyd(points, init)
        if centers is None:
            continue
        norms = np.linalg.norm(centers, axis=1)
        if np.any(norms < 1e-12):
            continue
        centers = centers / norms[:, None]
        return [SimulatedUser(true_weights=c, rationality=rationality) for c in centers]
    raise SamplerDegenerateError(
        f"k-means kept emptying a cluster across {_KMEANS_RETRIES} retries"
    )


def simulate_choice(user: SimulatedUser, pair: CandidatePair, seed: int) -> int:
    """Sample the user's noisy answer to a query: +1 for A, -1 for B."""
    if pair.dim != user.d:
        raise InvalidArgumentError(
            f"pair dimension {pair.dim} does not match user dimension {user.d}"
        )
    record = PreferenceRecord(
        features_a=pair.features_a,
        features_b=pair.features_b,
        choice=1,
        rationality=user.rationality,
    )
    p_a = preference_likelihood(record, user.true_weights)
    u = float(np.random.default_rng(seed).random())
    return 1 if u < p_a else -1


def reward_correlation(w_gt, w_est, feature_points) -> float:
    """Pearson correlation between true and estimated rewards of the points."""
    pts = np.asarray(feature_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InvalidArgumentError("need at least 2 feature points")
    gt = np.asarray(w_gt, dtype=np.float64)
    est = np.asarray(w_est, dtype=np.float64)
    if gt.shape != (pts.shape[1],) or est.shape != (pts.shape[1],):
        raise InvalidArgumentError("weight dimensions must match the feature points")
    r_gt = pts @ gt
    r_est = pts @ est
    a = r_gt - r_gt.mean()
    b = r_est - r_est.mean()
    var_a = float(a @ a)
    var_b = float(b @ b)
    if var_a == 0.0 or var_b == 0.0:
        raise UndefinedCorrelationError("constant rewards on one side")
    return float((a @ b) / np.sqrt(var_a * var_b))


def feature_box(spec: DomainSpec, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension feature ranges seen by 200 random rollouts.

    The rollouts are spread over 20 random environments, 10 each, so the box
    reflects what trajectories in this domain can actually accumulate.
    """
    lo_b, hi_b = spec.theta_bounds[:, 0], spec.theta_bounds[:, 1]
    observed = []
    for i in range(20):
        rng = np.random.default_rng(derive_seed(seed, "grid-theta", i))
        theta = lo_b + rng.random(spec.theta_dim) * (hi_b - lo_b)
        env = instantiate(spec, theta, spec.geometry_seed)
        for j in range(10):
            traj = random_rollout(env, spec, derive_seed(seed, "grid-roll", i, j))
            observed.append(features(env, traj, spec))
    observed = np.array(observed)
    return observed.min(axis=0), observed.max(axis=0)


def feature_grid(spec: DomainSpec, n_points: int = 10000, seed: int = 0) -> np.ndarray:
    """Feature points for the correlation metric.

    Points are sampled uniformly in the `feature_box` of the domain. A
    uniform box sample keeps the metric stable at dimensions where a literal
    grid would be sparse.
    """
    if n_points < 2:
        raise InvalidArgumentError(f"n_points must be at least 2, got {n_points}")
    lo, hi = feature_box(spec, seed)
    rng = np.random.default_rng(derive_seed(seed, "grid-points"))
    return lo + rng.random((n_points, spec.feature_dim)) * (hi - lo)


@dataclass(frozen=True)
class ExperimentConfig:
    """One full comparison: methods x users x seeds on a single domain."""

    spec: DomainSpec
    methods: tuple[str, ...]
    users: tuple[SimulatedUser, ...]
    rounds: int = 20
    seeds_per_cell: int = 3
    grid_points: int = 10000
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        methods = tuple(self.methods)
        if not methods:
            raise InvalidArgumentError("methods must be nonempty")
        for m in methods:
            if m not in METHODS:
                raise InvalidArgumentError(f"unknown method {m!r}")
        users = tuple(self.users)
        if not users:
            raise InvalidArgumentError("users must be nonempty")
        for u in users:
            if u.d != self.spec.feature_dim:
                raise InvalidArgumentError(
                    "user weight dimension does not match the domain features"
                )
        if self.rounds < 0:
            raise InvalidArgumentError(f"rounds must be >= 0, got {self.rounds}")
        if self.seeds_per_cell < 1:
            raise InvalidArgumentError(
                f"seeds_per_cell must be positive, got {self.seeds_per_cell}"
            )
        if self.grid_points < 2:
            raise InvalidArgumentError(
                f"grid_points must be at least 2, got {self.grid_points}"
            )
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "users", users)


@dataclass(frozen=True)
class ExperimentResult:
    """Flat per-round correlations plus their per-method aggregates."""

    rows: tuple[dict, ...]
    summary: dict

    def method_curve(self, method: str) -> tuple[list[int], list[float]]:
        entry = self.summary["methods"][method]
        return entry["rounds"], entry["mean"]


def _csv_text(rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "user", "seed", "round", "correlation"])
    for row in rows:
        writer.writerow(
            [row["method"], row["user"], row["seed"], row["round"], repr(row["correlation"])]
        )
    return buf.getvalue()


def _aggregate(rows, methods, rounds) -> dict:
    out = {}
    for method in methods:
        per_round_mean = []
        per_round_ci = []
        for t in range(rounds + 1):
            values = [
                r["correlation"] for r in rows if r["method"] == method and r["round"] == t
            ]
            if not values:
                per_round_mean.append(None)
                per_round_ci.append(None)
                continue
            arr = np.array(values)
            per_round_mean.append(float(arr.mean()))
            if arr.size > 1:
                ci = 1.96 * float(arr.std(ddof=1)) / float(np.sqrt(arr.size))
            else:
                ci = 0.0
            per_round_ci.append(ci)
        out[method] = {
            "rounds": list(range(rounds + 1)),
            "mean": per_round_mean,
            "ci95": per_round_ci,
        }
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Play every method against every simulated user and score each round.

    Row order is deterministic: methods in the configured order, users in
    order, then seed repetitions; each episode contributes one row per round
    plus a round-0 row scoring the prior mean. Episodes that fail are
    reported in the summary's error list instead of aborting the run.
    """
    grid = feature_grid(config.spec, config.grid_points, derive_seed(config.seed, "metric-grid"))
    rows: list[dict] = []
    errors: list[dict] = []
    traces: list[tuple[str, object]] = []

    for method in config.methods:
        for user_idx, user in enumerate(config.users):
            for rep in range(config.seeds_per_cell):
                cell_seed = derive_seed(config.seed, method, user_idx, rep)
                learner = replace(config.learner, method=method, seed=cell_seed)

                def answer(pair, round_index, _user=user, _cell=cell_seed):
                    return simulate_choice(
                        _user, pair, derive_seed(_cell, "answer", round_index)
                    )

                try:
                    if config.rounds == 0:
                        prior = sample_posterior(
                            (),
                            d=config.spec.feature_dim,
                            k=learner.belief_k,
                            burn_in=learner.belief_burn_in,
                            seed=derive_seed(cell_seed, "belief", 0),
                        )
                        means = [posterior_mean(prior)]
                        episode = None
                    else:
                        episode = run_episode(learner, config.spec, answer, config.rounds)
                        means = list(episode.posterior_means)
                    correlations = [
                        reward_correlation(user.true_weights, m, grid) for m in means
                    ]
                except PrefdesignError as exc:
                    errors.append(
                        {
                            "method": method,
                            "user": user_idx,
                            "seed": rep,
                            "error": f"{type(exc).__name__}: {exc}",
                        }
                    )
                    continue
                for t, corr in enumerate(correlations):
                    rows.append(
                        {
                            "method": method,
                            "user": user_idx,
                            "seed": rep,
                            "round": t,
                            "correlation": corr,
                        }
                    )
                if episode is not None:
                    traces.append((f"trace_{method}_{user_idx}_{rep}.jsonl", episode))

    summary = {
        "domain": config.spec.kind,
        "rounds": config.rounds,
        "seeds_per_cell": config.seeds_per_cell,
        "n_users": len(config.users),
        "methods": _aggregate(rows, config.methods, config.rounds),
        "errors": errors,
    }
    result = ExperimentResult(rows=tuple(rows), summary=summary)

    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(_csv_text(rows), encoding="utf-8")
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
        for name, episode in traces:
            episode.write_trace(trace_dir / name)
    return result
