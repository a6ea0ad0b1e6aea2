"""Parameterized task environments and trajectory machinery.

Two families are provided. `gridnav` is a 5x5 street lattice whose central
edges get their surface type from the design parameter theta; per-step
features count kilometers traveled on each surface. `tabletop` is a 6x6
workspace where theta places 2x2 blocks of three object categories; per-step
features count cells of each category entered plus path length.

Both compile to the same planner-facing form, a directed edge list with
per-edge feature vectors, so value iteration, rollouts, and feature
accumulation are shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NoPathError
from .seeding import derive_seed

TERRAIN_NAMES = ("paved", "grass", "asphalt", "concrete", "brick")
CATEGORY_NAMES = ("fruit", "accessories", "electronics")

GRIDNAV_FEATURES = ("length_km", "paved_km", "grass_km", "asphalt_km", "concrete_km")
TABLETOP_FEATURES = ("fruit_cells", "accessory_cells", "electronics_cells", "path_length")

_VI_RESIDUAL = 1e-9


@dataclass(frozen=True)
class DomainSpec:
    """Static description of a domain family: what theta means and how big it is."""

    kind: str
    theta_bounds: np.ndarray
    feature_dim: int
    horizon: int
    discount: float = 1.0
    geometry_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gridnav", "tabletop"):
            raise InvalidArgumentError(f"unknown domain kind {self.kind!r}")
        bounds = np.asarray(self.theta_bounds, dtype=np.float64)
        if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] < 1:
            raise InvalidArgumentError(f"theta_bounds must be (n, 2), got shape {bounds.shape}")
        if not np.all(np.isfinite(bounds)) or np.any(bounds[:, 0] > bounds[:, 1]):
            raise InvalidArgumentError("theta_bounds rows must be finite [lo, hi] with lo <= hi")
        if self.horizon < 1:
            raise InvalidArgumentError(f"horizon must be positive, got {self.horizon}")
        if not (0.0 < self.discount <= 1.0):
            raise InvalidArgumentError(f"discount must be in (0, 1], got {self.discount}")
        object.__setattr__(self, "theta_bounds", bounds)

    @property
    def theta_dim(self) -> int:
        return self.theta_bounds.shape[0]


def gridnav_spec(
    n_theta_edges: int = 12,
    horizon: int = 24,
    discount: float = 1.0,
    geometry_seed: int = 0,
) -> DomainSpec:
    """Street-lattice navigation: theta assigns surfaces to central edges."""
    if not 1 <= n_theta_edges <= 12:
        raise InvalidArgumentError("n_theta_edges must be between 1 and 12")
    bounds = np.tile([0.0, 1.0], (n_theta_edges, 1))
    return DomainSpec(
        kind="gridnav",
        theta_bounds=bounds,
        feature_dim=len(GRIDNAV_FEATURES),
        horizon=horizon,
        discount=discount,
        geometry_seed=geometry_seed,
    )


def tabletop_spec(
    horizon: int = 18,
    discount: float = 1.0,
    geometry_seed: int = 0,
) -> DomainSpec:
    """Tabletop traversal: theta places three 2x2 object blocks on a 6x6 grid."""
    bounds = np.tile([0.0, 1.0], (6, 1))
    return DomainSpec(
        kind="tabletop",
        theta_bounds=bounds,
        feature_dim=len(TABLETOP_FEATURES),
        horizon=horizon,
        discount=discount,
        geometry_seed=geometry_seed,
    )


@dataclass(frozen=True)
class Trajectory:
    """A path through an environment, stored as the visited state sequence."""

    states: tuple[int, ...]

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        if len(states) < 1:
            raise InvalidArgumentError("a trajectory must visit at least one state")
        object.__setattr__(self, "states", states)

    @property
    def steps(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.states[:-1], self.states[1:]))

    def __len__(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True, eq=False)
class EnvironmentInstance:
    """A concrete environment produced by `instantiate(spec, theta, seed)`.

    Holds both the human-readable description (nodes and surfaced edges, or
    the object grid) and the compiled planner arrays: directed edges sorted
    by (source, destination) with one feature row per edge.
    """

    spec: DomainSpec
    theta: np.ndarray
    start: int
    goal: int
    n_states: int
    nodes: tuple[tuple[int, int], ...]
    feature_names: tuple[str, ...]
    # gridnav only: undirected (u, v, length_m, terrain index) descriptors
    edge_table: tuple[tuple[int, int, float, int], ...] | None
    # tabletop only: occupant category per cell, -1 for empty
    grid: np.ndarray | None
    # compiled planner arrays
    edge_src: np.ndarray = field(repr=False)
    edge_dst: np.ndarray = field(repr=False)
    edge_phi: np.ndarray = field(repr=False)
    group_srcs: np.ndarray = field(repr=False)
    group_starts: np.ndarray = field(repr=False)
    step_lookup: dict = field(repr=False)

    def to_payload(self) -> dict:
        """JSON-renderable description for clients; no planner internals."""
        common = {
            "kind": self.spec.kind,
            "start": self.start,
            "goal": self.goal,
            "nodes": [list(rc) for rc in self.nodes],
            "feature_names": list(self.feature_names),
            "theta": self.theta.tolist(),
            "horizon": self.spec.horizon,
        }
        if self.spec.kind == "gridnav":
            common["terrains"] = list(TERRAIN_NAMES)
            common["edges"] = [
                {"u": u, "v": v, "length_m": length, "terrain": terrain}
                for u, v, length, terrain in self.edge_table
            ]
        else:
            common["categories"] = list(CATEGORY_NAMES)
            common["cells"] = self.grid.tolist()
        return common


def _bin_unit(value: float, n_bins: int) -> int:
    return min(int(value * n_bins), n_bins - 1)


def _compile(spec, theta, start, goal, n_states, nodes, names, directed, edge_table, grid):
    # directed: list of (src, dst, phi). Edges out of the goal are dropped so
    # the goal is absorbing for the planner.
    directed = sorted((e for e in directed if e[0] != goal), key=lambda e: (e[0], e[1]))
    edge_src = np.array([e[0] for e in directed], dtype=np.int64)
    edge_dst = np.array([e[1] for e in directed], dtype=np.int64)
    edge_phi = np.array([e[2] for e in directed], dtype=np.float64)
    group_srcs, group_starts = np.unique(edge_src, return_index=True)
    step_lookup = {(e[0], e[1]): i for i, e in enumerate(directed)}
    return EnvironmentInstance(
        spec=spec,
        theta=np.asarray(theta, dtype=np.float64).copy(),
        start=start,
        goal=goal,
        n_states=n_states,
        nodes=nodes,
        feature_names=names,
        edge_table=edge_table,
        grid=grid,
        edge_src=edge_src,
        edge_dst=edge_dst,
        edge_phi=edge_phi,
        group_srcs=group_srcs,
        group_starts=group_starts,
        step_lookup=step_lookup,
    )


def _gridnav_theta_edges() -> list[tuple[int, int]]:
    # The twelve central lattice edges, horizontals first, reading order.
    edges = []
    for r in (1, 2, 3):
        for c in (1, 2):
            edges.append((r * 5 + c, r * 5 + c + 1))
    for r in (1, 2):
        for c in (1, 2, 3):
            edges.append((r * 5 + c, (r + 1) * 5 + c))
    return edges


def _instantiate_gridnav(spec: DomainSpec, theta: np.ndarray, seed: int) -> EnvironmentInstance:
    side = 5
    nodes = tuple((r, c) for r in range(side) for c in range(side))
    undirected = []
    for r in range(side):
        for c in range(side):
            u = r * side + c
            if c < side - 1:
                undirected.append((u, u + 1))
            if r < side - 1:
                undirected.append((u, u + side))

    rng = np.random.default_rng(derive_seed(seed, "gridnav-geometry"))
    lengths = rng.uniform(80.0, 220.0, size=len(undirected))
    terrains = rng.integers(0, len(TERRAIN_NAMES), size=len(undirected))

    assignable = _gridnav_theta_edges()
    terrain_of = {edge: int(t) for edge, t in zip(undirected, terrains)}
    for i in range(spec.theta_dim):
        terrain_of[assignable[i]] = _bin_unit(float(theta[i]), len(TERRAIN_NAMES))

    edge_table = []
    directed = []
    for (u, v), length in zip(undirected, lengths):
        terrain = terrain_of[(u, v)]
        edge_table.append((u, v, float(length), terrain))
        km = length / 1000.0
        phi = np.zeros(len(GRIDNAV_FEATURES))
        phi[0] = km
        if terrain < 4:
            phi[1 + terrain] = km
        directed.append((u, v, phi))
        directed.append((v, u, phi))

    return _compile(
        spec, theta, start=0, goal=side * side - 1, n_states=side * side,
        nodes=nodes, names=GRIDNAV_FEATURES, directed=directed,
        edge_table=tuple(edge_table), grid=None,
    )


def _instantiate_tabletop(spec: DomainSpec, theta: np.ndarray, seed: int) -> EnvironmentInstance:
    side = 6
    nodes = tuple((r, c) for r in range(side) for c in range(side))
    grid = np.full((side, side), -1, dtype=np.int64)
    for cat in range(len(CATEGORY_NAMES)):
        anchor_r = _bin_unit(float(theta[2 * cat]), side - 1)
        anchor_c = _bin_unit(float(theta[2 * cat + 1]), side - 1)
        grid[anchor_r : anchor_r + 2, anchor_c : anchor_c + 2] = cat

    directed = []
    for r in range(side):
        for c in range(side):
            u = r * side + c
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nr, nc = r + dr, c + dc
                if 0 <= nr < side and 0 <= nc < side:
                    v = nr * side + nc
                    phi = np.zeros(len(TABLETOP_FEATURES))
                    occupant = grid[nr, nc]
                    if occupant >= 0:
                        phi[occupant] = 1.0
                    phi[3] = 1.0
                    directed.append((u, v, phi))

    return _compile(
        spec, theta, start=0, goal=side * side - 1, n_states=side * side,
        nodes=nodes, names=TABLETOP_FEATURES, directed=directed,
        edge_table=None, grid=grid,
    )


def instantiate(spec: DomainSpec, theta, seed: int | None = None) -> EnvironmentInstance:
    """Build the concrete environment for a design parameter theta.

    The same (spec, theta, seed) always yields the same instance; the parts
    of the environment theta does not control are drawn from the seed alone,
    so sweeping theta moves only what theta is supposed to move.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (spec.theta_dim,):
        raise InvalidArgumentError(
            f"theta must have shape ({spec.theta_dim},), got {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("theta contains non-finite entries")
    lo, hi = spec.theta_bounds[:, 0], spec.theta_bounds[:, 1]
    if np.any(theta < lo) or np.any(theta > hi):
        raise InvalidArgumentError("theta violates the spec bounds")
    if seed is None:
        seed = spec.geometry_seed
    if spec.kind == "gridnav":
        return _instantiate_gridnav(spec, theta, seed)
    return _instantiate_tabletop(spec, theta, seed)


def successor_states(env: EnvironmentInstance, state: int) -> list[int]:
    """Reachable next states, ascending; empty at the (absorbing) goal."""
    pos = np.searchsorted(env.group_srcs, state)
    if pos >= env.group_srcs.shape[0] or env.group_srcs[pos] != state:
        return []
    start = env.group_starts[pos]
    end = env.group_starts[pos + 1] if pos + 1 < env.group_starts.shape[0] else env.edge_src.shape[0]
    return [int(s) for s in env.edge_dst[start:end]]


def validate(env: EnvironmentInstance, traj: Trajectory) -> bool:
    """True when the trajectory starts at the start, follows edges, fits the horizon."""
    if len(traj) > env.spec.horizon:
        return False
    if traj.states[0] != env.start:
        return False
    for s in traj.states:
        if not 0 <= s < env.n_states:
            return False
    return all(step in env.step_lookup for step in traj.steps)


def features(env: EnvironmentInstance, traj: Trajectory, spec: DomainSpec) -> np.ndarray:
    """Discounted feature accumulation along a feasible trajectory."""
    if not validate(env, traj):
        raise InvalidArgumentError("trajectory is not feasible in this environment")
    phi = np.zeros(spec.feature_dim)
    scale = 1.0
    for step in traj.steps:
        phi += scale * env.edge_phi[env.step_lookup[step]]
        scale *= spec.discount
    return phi


def _value_iteration(env: EnvironmentInstance, weights: np.ndarray) -> np.ndarray:
    rewards = env.edge_phi @ weights
    gamma = env.spec.discount
    values = np.zeros(env.n_states)
    for _ in range(10 * env.n_states):
        q = rewards + gamma * values[env.edge_dst]
        updated = np.maximum.reduceat(q, env.group_starts)
        residual = float(np.max(np.abs(updated - values[env.group_srcs])))
        values[env.group_srcs] = updated
        if residual < _VI_RESIDUAL:
            break
    return values


def _greedy_step(env: EnvironmentInstance, values: np.ndarray, rewards: np.ndarray, state: int) -> int:
    pos = int(np.searchsorted(env.group_srcs, state))
    start = int(env.group_starts[pos])
    end = (
        int(env.group_starts[pos + 1])
        if pos + 1 < env.group_starts.shape[0]
        else env.edge_src.shape[0]
    )
    q = rewards[start:end] + env.spec.discount * values[env.edge_dst[start:end]]
    # Edges are sorted by destination within a group, so the first argmax is
    # the tie-break toward the lowest successor index.
    return int(env.edge_dst[start + int(np.argmax(q))])


def plan(env: EnvironmentInstance, weights, spec: DomainSpec) -> Trajectory:
    """Best goal-reaching trajectory for the given weights.

    Runs value iteration to (near) convergence, then rolls the greedy policy
    forward from the start. Raises NoPathError when the greedy rollout fails
    to reach the goal within the horizon, which happens when the weights make
    some loop look profitable.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (spec.feature_dim,):
        raise InvalidArgumentError(f"weights must have shape ({spec.feature_dim},)")
    values = _value_iteration(env, w)
    rewards = env.edge_phi @ w
    state = env.start
    visited = [state]
    for _ in range(spec.horizon):
        if state == env.goal:
            break
        state = _greedy_step(env, values, rewards, state)
        visited.append(state)
    if state != env.goal:
        raise NoPathError("greedy rollout did not reach the goal within the horizon")
    return Trajectory(states=tuple(visited))


def random_rollout(env: EnvironmentInstance, spec: DomainSpec, seed: int) -> Trajectory:
    """Uniform random walk from the start, stopping at the goal or horizon."""
    rng = np.random.default_rng(seed)
    state = env.start
    visited = [state]
    for _ in range(spec.horizon):
        if state == env.goal:
            break
        succ = successor_states(env, state)
        state = succ[int(rng.integers(len(succ)))]
        visited.append(state)
    return Trajectory(states=tuple(visited))


def epsilon_greedy_rollout(
    env: EnvironmentInstance, weights, spec: DomainSpec, epsilon: float, seed: int
) -> Trajectory:
    """Greedy rollout that deviates to a uniform random move with rate epsilon."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidArgumentError(f"epsilon must be in [0, 1], got {epsilon}")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (spec.feature_dim,):
        raise InvalidArgumentError(f"weights must have shape ({spec.feature_dim},)")
    rng = np.random.default_rng(seed)
    values = _value_iteration(env, w)
    rewards = env.edge_phi @ w
    state = env.start
    visited = [state]
    for _ in range(spec.horizon):
        if state == env.goal:
            break
        if rng.random() < epsilon:
            succ = successor_states(env, state)
            state = succ[int(rng.integers(len(succ)))]
        else:
            state = _greedy_step(env, values, rewards, state)
        visited.append(state)
    return Trajectory(states=tuple(visited))


def best_of_rollouts(
    env: EnvironmentInstance, weights, spec: DomainSpec, n: int = 32, seed: int = 0
) -> Trajectory:
    """Highest-reward trajectory among n seeded random rollouts.

    A planning stand-in for weight vectors under which greedy planning cycles;
    unlike `plan` it always returns something, goal-reaching or not.
    """
    w = np.asarray(weights, dtype=np.float64)
    best_traj = None
    best_score = -np.inf
    for i in range(n):
        traj = random_rollout(env, spec, derive_seed(seed, "rollout", i))
        score = float(np.dot(w, features(env, traj, spec)))
        if score > best_score:
            best_score = score
            best_traj = traj
    return best_traj
