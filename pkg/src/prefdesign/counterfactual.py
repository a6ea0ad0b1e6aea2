"""Synthesizing a comparison query from counterfactual plans.

The learner asks: if the person's weights were w, how would they act here?
Sampling weights from the belief, planning under a spread-out subset of them,
and scoring all pairs of the resulting trajectories yields a comparison that
is informative precisely where the belief still disagrees with itself.
"""

from __future__ import annotations

import numpy as np

from .belief import BeliefSamples
from .domains import EnvironmentInstance, Trajectory, best_of_rollouts, features, plan
from .errors import DegenerateQueryError, InvalidArgumentError, NoPathError
from .queries import CandidatePair, best_pair
from .seeding import derive_seed

_ZERO_NORM = 1e-12
_DEDUP_TOL = 1e-9


def _diverse_indices(weights: np.ndarray, m: int) -> list[int]:
    norms = np.linalg.norm(weights, axis=1)
    unit = weights / norms[:, None]
    cosine = np.clip(unit @ unit.T, -1.0, 1.0)
    distance = 1.0 - cosine
    chosen = [int(np.argmax(norms))]
    while len(chosen) < m:
        to_chosen = distance[:, chosen].min(axis=1)
        to_chosen[chosen] = -np.inf
        chosen.append(int(np.argmax(to_chosen)))
    return chosen


def select_diverse(weights, m: int) -> list[np.ndarray]:
    """Greedy farthest-point subset of m weight vectors by cosine distance.

    Starts from the largest-norm vector and repeatedly adds the vector whose
    smallest cosine distance to the chosen set is largest. Ties go to the
    lowest index, so the result is deterministic.
    """
    W = np.asarray(weights, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] < 1:
        raise InvalidArgumentError("weights must be a non-empty 2-d array")
    if not 1 <= m <= W.shape[0]:
        raise InvalidArgumentError(f"m must be in [1, {W.shape[0]}], got {m}")
    if np.any(np.linalg.norm(W, axis=1) <= _ZERO_NORM):
        raise InvalidArgumentError("cosine distance is undefined for zero-norm weights")
    return [W[i].copy() for i in _diverse_indices(W, m)]


def generate_counterfactuals(env: EnvironmentInstance, weights) -> list[Trajectory]:
    """Plan once per weight vector; errors from any single plan propagate."""
    return [plan(env, w, env.spec) for w in weights]


def _plan_or_surrogate(env, w, seed):
    try:
        return plan(env, w, env.spec)
    except NoPathError:
        # Weights that make greedy planning cycle still deserve a plausible
        # behavior sample, so fall back to the best of a batch of rollouts.
        return best_of_rollouts(env, w, env.spec, n=32, seed=seed)


def counterfactual_query(
    belief: BeliefSamples,
    env: EnvironmentInstance,
    n: int = 50,
    m: int = 8,
    seed: int = 0,
    rationality: float = 1.0,
):
    """Build the most informative comparison this environment supports.

    Draws `n` weight vectors from the belief, keeps a spread-out subset of
    `m`, plans under each, deduplicates the resulting trajectories by their
    features, and returns (pair, gain) for the best-scoring pair.

    Raises DegenerateQueryError when fewer than two distinct behaviors
    remain, which is what happens once the belief has collapsed onto a
    single way of acting in this environment.
    """
    if m < 2:
        raise InvalidArgumentError(f"m must be at least 2, got {m}")
    if n < m:
        raise InvalidArgumentError(f"n must be at least m, got n={n} m={m}")
    if belief.d != env.spec.feature_dim:
        raise InvalidArgumentError(
            f"belief dimension {belief.d} does not match feature dimension "
            f"{env.spec.feature_dim}"
        )

    rng = np.random.default_rng(derive_seed(seed, "draw"))
    drawn = belief.samples[rng.integers(0, belief.k, size=n)]
    drawn = drawn[np.linalg.norm(drawn, axis=1) > _ZERO_NORM]
    if drawn.shape[0] < 2:
        raise DegenerateQueryError("belief is concentrated at zero reward")

    picked = _diverse_indices(drawn, min(m, drawn.shape[0]))
    trajectories = [
        _plan_or_surrogate(env, drawn[idx], derive_seed(seed, "surrogate", j))
        for j, idx in enumerate(picked)
    ]

    kept_feats: list[np.ndarray] = []
    kept: list[tuple[Trajectory, int]] = []
    for traj, idx in zip(trajectories, picked):
        phi = features(env, traj, env.spec)
        if any(np.max(np.abs(phi - f)) <= _DEDUP_TOL for f in kept_feats):
            continue
        kept_feats.append(phi)
        kept.append((traj, idx))
    if len(kept) < 2:
        raise DegenerateQueryError(
            "all counterfactual plans coincide in this environment"
        )

    (i, j), gain = best_pair(kept_feats, belief, rationality=rationality)
    pair = CandidatePair(
        features_a=kept_feats[i],
        features_b=kept_feats[j],
        provenance=f"counterfactual:w{kept[i][1]}|w{kept[j][1]}",
        trajectory_a=kept[i][0],
        trajectory_b=kept[j][0],
        gain_bits=gain,
    )
    return pair, gain
