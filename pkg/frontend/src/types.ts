// Wire types for the session service. Field names mirror the JSON payloads
// exactly, so everything here is snake_case.

export type GridEdge = {
  u: number;
  v: number;
  length_m: number;
  terrain: number;
};

export type EnvironmentPayload = {
  kind: string;
  start: number;
  goal: number;
  nodes: number[][];
  feature_names: string[];
  theta: number[];
  horizon: number;
  // gridnav
  terrains?: string[];
  edges?: GridEdge[];
  // tabletop
  categories?: string[];
  cells?: number[][];
};

export type QueryPayload = {
  round: number;
  rounds_total: number;
  theta: number[];
  environment: EnvironmentPayload;
  provenance: string;
  gain_bits: number | null;
  trajectory_a: number[] | null;
  trajectory_b: number[] | null;
  features_a: number[];
  features_b: number[];
};

export type SessionCreated = {
  id: string;
  rounds_total: number;
  query: QueryPayload;
};

export type AnswerResult = {
  round: number;
  answer: number;
  posterior_mean: number[];
  correlation: number | null;
  done: boolean;
  next_query: QueryPayload | null;
};

export type BeliefPayload = {
  d: number;
  seed: number;
  acceptance_rate: number;
  samples: number[][];
};

export type ApiErrorBody = {
  code: string;
  message: string;
};
