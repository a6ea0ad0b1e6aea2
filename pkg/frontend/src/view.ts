import { EnvironmentPayload, QueryPayload } from "./types.js";

/** Raised when a query payload cannot be rendered safely. */
export class PayloadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadError";
  }
}

export type ViewModel = {
  sessionId: string;
  round: number;
  roundsTotal: number;
  environment: EnvironmentPayload;
  trajectoryA: number[];
  trajectoryB: number[];
  /** Both trajectories visit exactly the same states. */
  identical: boolean;
  posteriorMean: number[] | null;
  correlation: number | null;
};

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isIndexArray(xs: unknown, limit: number): xs is number[] {
  return (
    Array.isArray(xs) &&
    xs.length > 0 &&
    xs.every((x) => Number.isInteger(x) && (x as number) >= 0 && (x as number) < limit)
  );
}

function checkEnvironment(env: unknown): EnvironmentPayload {
  if (typeof env !== "object" || env === null) {
    throw new PayloadError("environment missing");
  }
  const e = env as EnvironmentPayload;
  if (!Array.isArray(e.nodes) || e.nodes.length === 0) {
    throw new PayloadError("environment has no nodes");
  }
  for (const node of e.nodes) {
    if (!Array.isArray(node) || node.length !== 2 || !node.every(isFiniteNumber)) {
      throw new PayloadError("node coordinates must be [row, col] pairs");
    }
  }
  const n = e.nodes.length;
  if (!Number.isInteger(e.start) || e.start < 0 || e.start >= n) {
    throw new PayloadError("start is not a node");
  }
  if (!Number.isInteger(e.goal) || e.goal < 0 || e.goal >= n) {
    throw new PayloadError("goal is not a node");
  }
  if (e.kind === "gridnav") {
    if (!Array.isArray(e.terrains) || !Array.isArray(e.edges)) {
      throw new PayloadError("gridnav payload needs terrains and edges");
    }
    for (const edge of e.edges) {
      const endpointsOk =
        Number.isInteger(edge.u) && edge.u >= 0 && edge.u < n &&
        Number.isInteger(edge.v) && edge.v >= 0 && edge.v < n;
      if (!endpointsOk) {
        throw new PayloadError("edge endpoint is not a node");
      }
      if (!Number.isInteger(edge.terrain) || edge.terrain < 0 || edge.terrain >= e.terrains.length) {
        throw new PayloadError("edge terrain index out of range");
      }
      if (!isFiniteNumber(edge.length_m) || edge.length_m <= 0) {
        throw new PayloadError("edge length must be positive");
      }
    }
  } else if (e.kind === "tabletop") {
    if (!Array.isArray(e.categories) || !Array.isArray(e.cells) || e.cells.length === 0) {
      throw new PayloadError("tabletop payload needs categories and cells");
    }
    const width = (e.cells[0] as number[]).length;
    for (const row of e.cells) {
      if (!Array.isArray(row) || row.length !== width) {
        throw new PayloadError("cell rows must be rectangular");
      }
      for (const c of row) {
        if (!Number.isInteger(c) || c < 0 || c >= e.categories.length) {
          throw new PayloadError("cell category index out of range");
        }
      }
    }
  } else {
    throw new PayloadError(`unknown environment kind ${JSON.stringify(e.kind)}`);
  }
  return e;
}

function sameStates(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((x, i) => x === b[i]);
}

/**
 * Validate a query payload and bundle it with session-level state into the
 * renderer's input. Anything malformed throws PayloadError so the caller can
 * show the error banner instead of a half-drawn scene.
 */
export function buildViewModel(
  sessionId: string,
  query: QueryPayload,
  posteriorMean: number[] | null = null,
  correlation: number | null = null,
): ViewModel {
  if (typeof query !== "object" || query === null) {
    throw new PayloadError("query payload missing");
  }
  if (!Number.isInteger(query.round) || query.round < 1) {
    throw new PayloadError("round must be a positive integer");
  }
  if (!Number.isInteger(query.rounds_total) || query.rounds_total < query.round) {
    throw new PayloadError("rounds_total is inconsistent with round");
  }
  const environment = checkEnvironment(query.environment);
  const n = environment.nodes.length;
  if (!isIndexArray(query.trajectory_a, n) || !isIndexArray(query.trajectory_b, n)) {
    throw new PayloadError("both trajectories must be node sequences");
  }
  return {
    sessionId,
    round: query.round,
    roundsTotal: query.rounds_total,
    environment,
    trajectoryA: query.trajectory_a,
    trajectoryB: query.trajectory_b,
    identical: sameStates(query.trajectory_a, query.trajectory_b),
    posteriorMean,
    correlation,
  };
}
