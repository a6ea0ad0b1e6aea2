"""Independent reference implementations used to cross-check the package.

Everything here favors obviousness over speed: rejection sampling, exhaustive
enumeration, dense linear algebra, plain loops. Tests compare the package's
vectorized or approximate routines against these.
"""

from __future__ import annotations

import math

import numpy as np


def uniform_ball_rejection(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the d-dimensional unit ball via cube rejection."""
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        batch = rng.uniform(-1.0, 1.0, size=(max(n, 64), d))
        keep = batch[np.linalg.norm(batch, axis=1) <= 1.0]
        take = min(n - filled, keep.shape[0])
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def posterior_rejection(records, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Posterior samples via rejection from the uniform-ball prior.

    Each prior draw is kept with probability equal to its full data
    likelihood, which is valid because every per-record likelihood is <= 1.
    """
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        w = uniform_ball_rejection(d, 1, rng)[0]
        log_lik = 0.0
        for r in records:
            t = r.choice * r.rationality * float(np.dot(w, r.features_a - r.features_b))
            log_lik += -math.log1p(math.exp(-t)) if t >= 0 else t - math.log1p(math.exp(t))
        if rng.random() < math.exp(log_lik):
            out[filled] = w
            filled += 1
    return out


def mutual_information_entropy_form(p) -> float:
    """Answer/sample-index mutual information via the entropy decomposition.

    With the sample index uniform over K and the answer Bernoulli(p_k) given
    index k, the mutual information is H(mean(p)) - mean(H(p_k)) in bits.
    This is an algebraically independent route to the same quantity the
    package estimates through the ratio form.
    """
    p = np.asarray(p, dtype=float)

    def h(q):
        if q <= 0.0 or q >= 1.0:
            return 0.0
        return -q * math.log2(q) - (1 - q) * math.log2(1 - q)

    marginal = float(p.mean())
    cond = sum(h(float(q)) for q in p) / p.size
    return h(marginal) - cond


def enumerate_simple_paths(successors, start: int, goal: int):
    """All simple start-to-goal paths, as tuples of states, via DFS."""
    paths = []
    stack = [(start, (start,), frozenset((start,)))]
    while stack:
        node, path, seen = stack.pop()
        if node == goal:
            paths.append(path)
            continue
        for nxt in successors(node):
            if nxt not in seen:
                stack.append((nxt, path + (nxt,), seen | {nxt}))
    return paths


def best_simple_path_return(env, weights) -> float:
    """Exhaustive max of w . Phi over undiscounted simple start-goal paths."""
    from prefdesign import domains

    def successors(s):
        return domains.successor_states(env, s)

    best = -math.inf
    for path in enumerate_simple_paths(successors, env.start, env.goal):
        phi = domains.features(env, domains.Trajectory(states=path), env.spec)
        best = max(best, float(np.dot(weights, phi)))
    return best


def gp_posterior_dense(train_x, train_y, query, length_scales, signal_var, noise_var):
    """GP posterior mean/std by forming and solving the dense system directly."""
    train_x = np.asarray(train_x, dtype=float)
    train_y = np.asarray(train_y, dtype=float)
    query = np.asarray(query, dtype=float)

    def k(a, b):
        r2 = 0.0
        for i in range(a.shape[0]):
            r2 += ((a[i] - b[i]) / length_scales[i]) ** 2
        r = math.sqrt(5.0 * r2)
        return signal_var * (1.0 + r + r * r / 3.0) * math.exp(-r)

    n = train_x.shape[0]
    if n == 0:
        return 0.0, math.sqrt(signal_var)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = k(train_x[i], train_x[j])
    K += noise_var * np.eye(n)
    ks = np.array([k(train_x[i], query) for i in range(n)])
    alpha = np.linalg.solve(K, train_y)
    mean = float(ks @ alpha)
    var = k(query, query) - float(ks @ np.linalg.solve(K, ks))
    return mean, math.sqrt(max(var, 0.0))


def grid_argmax_ucb(model, bounds, kappa, points_per_dim=100):
    """Arg max of the UCB acquisition over a dense regular grid."""
    from prefdesign import envdesign

    bounds = np.asarray(bounds, dtype=float)
    axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.array([envdesign.ucb(model, p, kappa) for p in pts])
    best = int(np.argmax(vals))
    return pts[best], float(vals[best])


def greedy_cosine_subset(W, m):
    """Farthest-point selection written with explicit loops and lists."""
    W = [list(map(float, row)) for row in W]
    norms = [math.sqrt(sum(x * x for x in w)) for w in W]

    def cos_dist(i, j):
        dot = sum(a * b for a, b in zip(W[i], W[j]))
        return 1.0 - dot / (norms[i] * norms[j])

    chosen = [norms.index(max(norms))]
    while len(chosen) < m:
        best_i, best_d = None, -math.inf
        for i in range(len(W)):
            if i in chosen:
                continue
            d = min(cos_dist(i, c) for c in chosen)
            if d > best_d:
                best_d, best_i = d, i
        chosen.append(best_i)
    return chosen


def pearson_reference(x, y) -> float:
    """Pearson correlation written out term by term."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x - x.mean()
    ym = y - y.mean()
    return float((xm * ym).sum() / math.sqrt((xm**2).sum() * (ym**2).sum()))
