import { describe, expect, it } from "vitest";

import { buildViewModel, PayloadError } from "../src/view.js";
import { QueryPayload } from "../src/types.js";
import { tinyQuery } from "./helpers.js";

describe("buildViewModel", () => {
  it("carries the payload through on valid input", () => {
    const view = buildViewModel("s1", tinyQuery());
    expect(view.sessionId).toBe("s1");
    expect(view.round).toBe(1);
    expect(view.roundsTotal).toBe(6);
    expect(view.trajectoryA).toEqual([0, 1, 3]);
    expect(view.trajectoryB).toEqual([0, 2, 3]);
    expect(view.identical).toBe(false);
    expect(view.posteriorMean).toBeNull();
  });

  it("flags identical trajectories for the overlap badge", () => {
    const query = tinyQuery();
    query.trajectory_b = [...query.trajectory_a!];
    expect(buildViewModel("s1", query).identical).toBe(true);
  });

  it("treats equal-length but different routes as distinct", () => {
    const view = buildViewModel("s1", tinyQuery());
    expect(view.trajectoryA.length).toBe(view.trajectoryB.length);
    expect(view.identical).toBe(false);
  });

  const broken: [string, (q: QueryPayload) => void][] = [
    ["missing environment", (q) => void ((q as Record<string, unknown>).environment = null)],
    ["no nodes", (q) => void (q.environment.nodes = [])],
    ["bad node shape", (q) => void (q.environment.nodes = [[0], [1]])],
    ["start off the map", (q) => void (q.environment.start = 99)],
    ["goal off the map", (q) => void (q.environment.goal = -1)],
    ["unknown kind", (q) => void (q.environment.kind = "maze")],
    ["gridnav without edges", (q) => void delete q.environment.edges],
    ["edge endpoint off the map", (q) => void (q.environment.edges![0].u = 44)],
    ["terrain index out of range", (q) => void (q.environment.edges![0].terrain = 9)],
    ["negative edge length", (q) => void (q.environment.edges![0].length_m = -3)],
    ["trajectory A missing", (q) => void (q.trajectory_a = null)],
    ["trajectory visits a non-node", (q) => void (q.trajectory_b = [0, 7, 3])],
    ["empty trajectory", (q) => void (q.trajectory_a = [])],
    ["fractional state id", (q) => void (q.trajectory_a = [0, 1.5, 3])],
    ["round zero", (q) => void (q.round = 0)],
    ["rounds_total below round", (q) => void (q.rounds_total = 0)],
  ];

  for (const [label, mutate] of broken) {
    it(`rejects a payload with ${label}`, () => {
      const query = tinyQuery();
      mutate(query);
      expect(() => buildViewModel("s1", query)).toThrow(PayloadError);
    });
  }

  it("accepts a rectangular tabletop payload", () => {
    const query = tinyQuery();
    query.environment = {
      kind: "tabletop",
      start: 0,
      goal: 3,
      nodes: [[0, 0], [0, 1], [1, 0], [1, 1]],
      feature_names: ["reach", "clutter"],
      theta: [0.2],
      horizon: 6,
      categories: ["empty", "plant", "mug", "book"],
      cells: [[0, 1], [2, 3]],
    };
    const view = buildViewModel("s1", query);
    expect(view.environment.kind).toBe("tabletop");
  });

  it("rejects a tabletop cell with an unknown category", () => {
    const query = tinyQuery();
    query.environment = {
      ...query.environment,
      kind: "tabletop",
      categories: ["empty"],
      cells: [[0, 5]],
    };
    expect(() => buildViewModel("s1", query)).toThrow(PayloadError);
  });
});
