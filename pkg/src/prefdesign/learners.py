"""Episode orchestration: one query per round, one belief update per answer.

Methods:
    CRED    counterfactual queries inside designed environments (the full loop)
    CR      counterfactual queries in the fixed default environment
    MBP     plan under the posterior mean vs an epsilon-perturbed rollout of it
    RR      best pair from a pool of random rollouts
    MBP-ED  MBP's pair generation driven by the environment design loop
    CR-DR / MBP-DR / RR-DR
            the fixed-environment methods repeated across uniformly random
            environments, keeping the environment whose pair scores best

All randomness is derived from the config seed and the round index, so a
whole episode is a pure function of (config, spec, answers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .belief import BeliefSamples, PreferenceRecord, posterior_mean, sample_posterior
from .counterfactual import counterfactual_query
from .domains import (
    DomainSpec,
    best_of_rollouts,
    epsilon_greedy_rollout,
    features,
    instantiate,
    plan,
    random_rollout,
)
from .envdesign import DesignBudget, run_environment_design
from .errors import (
    DegenerateDesignError,
    DegenerateQueryError,
    InvalidArgumentError,
    NoPathError,
)
from .queries import CandidatePair, best_pair, info_gain
from .seeding import derive_seed

METHODS = ("CRED", "CR", "MBP", "MBP-ED", "RR", "RR-DR", "MBP-DR", "CR-DR")

_DISTINCT_TOL = 1e-9
_FALLBACK_ATTEMPTS = 16


@dataclass(frozen=True)
class LearnerConfig:
    """Everything a learning episode needs besides the domain itself."""

    method: str = "CRED"
    epsilon: float = 0.25
    n_rollouts: int = 100
    budget: DesignBudget = field(default_factory=DesignBudget)
    cf_samples: int = 50
    cf_diverse: int = 8
    belief_k: int = 1000
    belief_burn_in: int | None = None
    rationality: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidArgumentError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.n_rollouts < 2:
            raise InvalidArgumentError(f"n_rollouts must be at least 2, got {self.n_rollouts}")
        if self.cf_samples < self.cf_diverse or self.cf_diverse < 2:
            raise InvalidArgumentError("need cf_samples >= cf_diverse >= 2")
        if self.belief_k < 2:
            raise InvalidArgumentError(f"belief_k must be at least 2, got {self.belief_k}")
        if not (np.isfinite(self.rationality) and self.rationality > 0):
            raise InvalidArgumentError(f"rationality must be positive, got {self.rationality}")


@dataclass(frozen=True)
class QueryRound:
    """One completed round: what was asked, what was answered."""

    round: int
    theta: np.ndarray
    pair: CandidatePair
    gain: float
    answer: int
    posterior_ref: str

    def to_payload(self) -> dict:
        return {
            "round": self.round,
            "theta": np.asarray(self.theta).tolist(),
            "gain": self.gain,
            "answer": self.answer,
            "provenance": self.pair.provenance,
            "features_a": self.pair.features_a.tolist(),
            "features_b": self.pair.features_b.tolist(),
            "trajectory_a": list(self.pair.trajectory_a.states) if self.pair.trajectory_a else None,
            "trajectory_b": list(self.pair.trajectory_b.states) if self.pair.trajectory_b else None,
            "posterior_ref": self.posterior_ref,
        }


def _default_theta(spec: DomainSpec) -> np.ndarray:
    return spec.theta_bounds.mean(axis=1)


def _mean_plan(belief, env, spec, seed):
    mean = posterior_mean(belief)
    try:
        return plan(env, mean, spec)
    except NoPathError:
        return best_of_rollouts(env, mean, spec, n=32, seed=seed)


def fallback_pair(belief, env, spec, seed, rationality=1.0):
    """A guaranteed query: the mean-belief plan against a random rollout.

    Used whenever a method's own pair generation degenerates; tries a few
    rollout seeds to find one that actually differs from the plan.
    """
    anchor = _mean_plan(belief, env, spec, derive_seed(seed, "anchor"))
    phi_anchor = features(env, anchor, spec)
    rollout = None
    for attempt in range(_FALLBACK_ATTEMPTS):
        rollout = random_rollout(env, spec, derive_seed(seed, "fallback", attempt))
        if np.max(np.abs(features(env, rollout, spec) - phi_anchor)) > _DISTINCT_TOL:
            break
    pair = CandidatePair(
        features_a=phi_anchor,
        features_b=features(env, rollout, spec),
        provenance="fallback:mean-plan|rollout",
        trajectory_a=anchor,
        trajectory_b=rollout,
    )
    gain = info_gain(pair, belief, rationality=rationality)
    return replace(pair, gain_bits=gain), gain


def _mbp_pair(belief, env, spec, epsilon, seed, rationality):
    planned = _mean_plan(belief, env, spec, derive_seed(seed, "mbp-plan"))
    mean = posterior_mean(belief)
    perturbed = epsilon_greedy_rollout(env, mean, spec, epsilon, derive_seed(seed, "mbp-perturb"))
    phi_a = features(env, planned, spec)
    phi_b = features(env, perturbed, spec)
    if np.max(np.abs(phi_a - phi_b)) <= _DISTINCT_TOL:
        raise DegenerateQueryError("perturbed rollout matches the mean plan")
    pair = CandidatePair(
        features_a=phi_a,
        features_b=phi_b,
        provenance="mean-belief-perturbation",
        trajectory_a=planned,
        trajectory_b=perturbed,
    )
    gain = info_gain(pair, belief, rationality=rationality)
    return replace(pair, gain_bits=gain), gain


def _rr_pair(belief, env, spec, n_rollouts, seed, rationality):
    rollouts = [
        random_rollout(env, spec, derive_seed(seed, "pool", i)) for i in range(n_rollouts)
    ]
    feats = []
    kept = []
    for traj in rollouts:
        phi = features(env, traj, spec)
        if any(np.max(np.abs(phi - f)) <= _DISTINCT_TOL for f in feats):
            continue
        feats.append(phi)
        kept.append(traj)
    if len(kept) < 2:
        raise DegenerateQueryError("rollout pool collapsed to one distinct behavior")
    (i, j), gain = best_pair(feats, belief, rationality=rationality)
    pair = CandidatePair(
        features_a=feats[i],
        features_b=feats[j],
        provenance=f"random-rollouts:{i}|{j}",
        trajectory_a=kept[i],
        trajectory_b=kept[j],
        gain_bits=gain,
    )
    return pair, gain


def _base_generator(config: LearnerConfig, base: str):
    if base == "CR":
        def generate(belief, env, spec, seed):
            return counterfactual_query(
                belief, env, n=config.cf_samples, m=config.cf_diverse,
                seed=seed, rationality=config.rationality,
            )
    elif base == "MBP":
        def generate(belief, env, spec, seed):
            return _mbp_pair(belief, env, spec, config.epsilon, seed, config.rationality)
    else:
        def generate(belief, env, spec, seed):
            return _rr_pair(belief, env, spec, config.n_rollouts, seed, config.rationality)
    return generate


def _fixed_env_query(config, belief, spec, round_seed, base):
    theta = _default_theta(spec)
    env = instantiate(spec, theta, spec.geometry_seed)
    if base == "RR":
        # RR compares trajectories from a dataset generated once per episode,
        # so its pool seed is deliberately independent of the round.
        query_seed = derive_seed(config.seed, "rr-data")
    else:
        query_seed = derive_seed(round_seed, base)
    try:
        pair, _ = _base_generator(config, base)(belief, env, spec, query_seed)
    except DegenerateQueryError:
        pair, _ = fallback_pair(
            belief, env, spec, derive_seed(round_seed, "fb"), config.rationality
        )
    return theta, pair


def _randomized_env_query(config, belief, spec, round_seed, base):
    # Domain randomization: same pair generator, environments drawn blindly,
    # as many of them as the design loop would have evaluated.
    generate = _base_generator(config, base)
    lo, hi = spec.theta_bounds[:, 0], spec.theta_bounds[:, 1]
    best = None
    for t in range(config.budget.total_evals):
        rng = np.random.default_rng(derive_seed(round_seed, "dr-theta", t))
        theta = lo + rng.random(spec.theta_dim) * (hi - lo)
        env = instantiate(spec, theta, spec.geometry_seed)
        try:
            pair, gain = generate(belief, env, spec, derive_seed(round_seed, "dr-query", t))
        except DegenerateQueryError:
            continue
        if best is None or gain > best[2]:
            best = (theta, pair, gain)
    if best is None:
        theta = _default_theta(spec)
        env = instantiate(spec, theta, spec.geometry_seed)
        pair, _ = fallback_pair(
            belief, env, spec, derive_seed(round_seed, "fb"), config.rationality
        )
        return theta, pair
    return best[0], best[1]


def _designed_env_query(config, belief, spec, round_seed, base):
    inner = None
    if base == "MBP":
        def inner(b, env, s):
            return _mbp_pair(b, env, spec, config.epsilon, s, config.rationality)
    try:
        result = run_environment_design(
            belief, spec, config.budget, seed=round_seed,
            n=config.cf_samples, m=config.cf_diverse,
            rationality=config.rationality, inner=inner,
        )
        return result.theta, result.pair
    except DegenerateDesignError:
        theta = _default_theta(spec)
        env = instantiate(spec, theta, spec.geometry_seed)
        pair, _ = fallback_pair(
            belief, env, spec, derive_seed(round_seed, "fb"), config.rationality
        )
        return theta, pair


def next_query(config: LearnerConfig, belief: BeliefSamples, spec: DomainSpec, round_seed: int):
    """Produce this round's (theta, pair) according to the configured method."""
    method = config.method
    if method == "CRED":
        return _designed_env_query(config, belief, spec, round_seed, "CR")
    if method == "MBP-ED":
        return _designed_env_query(config, belief, spec, round_seed, "MBP")
    if method in ("CR", "MBP", "RR"):
        return _fixed_env_query(config, belief, spec, round_seed, method)
    base = method.split("-")[0]
    return _randomized_env_query(config, belief, spec, round_seed, base)


def incorporate_answer(records, pair: CandidatePair, answer: int, config: LearnerConfig, seed: int):
    """Append the answered comparison and resample the posterior from scratch."""
    if answer not in (1, -1):
        raise InvalidArgumentError(f"answer must be +1 or -1, got {answer!r}")
    record = PreferenceRecord(
        features_a=pair.features_a,
        features_b=pair.features_b,
        choice=answer,
        rationality=config.rationality,
    )
    updated = (*records, record)
    belief = sample_posterior(
        updated,
        d=pair.dim,
        k=config.belief_k,
        burn_in=config.belief_burn_in,
        seed=seed,
    )
    return updated, belief


class EpisodeState:
    """Stepwise driver for one episode; shared by batch runs and the service."""

    def __init__(self, config: LearnerConfig, spec: DomainSpec):
        self.config = config
        self.spec = spec
        self.records: tuple[PreferenceRecord, ...] = ()
        self.history: list[QueryRound] = []
        self.pending: tuple[np.ndarray, CandidatePair] | None = None
        self.belief = sample_posterior(
            (),
            d=spec.feature_dim,
            k=config.belief_k,
            burn_in=config.belief_burn_in,
            seed=derive_seed(config.seed, "belief", 0),
        )

    @property
    def completed_rounds(self) -> int:
        return len(self.history)

    def propose(self):
        """The current round's query, generating it on first call."""
        if self.pending is None:
            round_seed = derive_seed(self.config.seed, "round", self.completed_rounds + 1)
            self.pending = next_query(self.config, self.belief, self.spec, round_seed)
        return self.pending

    def submit(self, answer: int) -> QueryRound:
        """Record the answer to the pending query and refresh the belief."""
        theta, pair = self.propose()
        index = self.completed_rounds + 1
        self.records, self.belief = incorporate_answer(
            self.records, pair, answer, self.config,
            derive_seed(self.config.seed, "belief", index),
        )
        done = QueryRound(
            round=index,
            theta=theta,
            pair=pair,
            gain=pair.gain_bits if pair.gain_bits is not None else 0.0,
            answer=answer,
            posterior_ref=f"chain-seed:{self.belief.seed}",
        )
        self.history.append(done)
        self.pending = None
        return done


@dataclass(frozen=True)
class EpisodeResult:
    rounds: tuple[QueryRound, ...]
    posterior_means: tuple[np.ndarray, ...]  # index 0 is the prior mean
    belief: BeliefSamples

    def write_trace(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for qr in self.rounds:
                fh.write(json.dumps(qr.to_payload()) + "\n")


def run_episode(config: LearnerConfig, spec: DomainSpec, answer_fn, rounds: int) -> EpisodeResult:
    """Run a full episode, asking `answer_fn(pair, round_index)` for each answer."""
    if rounds < 1:
        raise InvalidArgumentError(f"rounds must be positive, got {rounds}")
    state = EpisodeState(config, spec)
    means = [posterior_mean(state.belief)]
    for i in range(1, rounds + 1):
        _, pair = state.propose()
        answer = int(answer_fn(pair, i))
        state.submit(answer)
        means.append(posterior_mean(state.belief))
    return EpisodeResult(
        rounds=tuple(state.history),
        posterior_means=tuple(means),
        belief=state.belief,
    )
