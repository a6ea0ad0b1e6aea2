import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { drawScene, TRAJECTORY_STYLE } from "../src/render.js";
import { BeliefPayload } from "../src/types.js";
import { buildViewModel } from "../src/view.js";
import { RecordingContext } from "./helpers.js";

// Live-loop equivalence against the real service: a scripted six-round
// session driven through the UI controller must leave the exact belief that
// the headless replay command computes from the same config and answers.

const PORT = 18731;
const BASE = `http://127.0.0.1:${PORT}`;
const ANSWERS = "ABBABA" as const;
const LEARNER = {
  method: "CRED",
  seed: 3,
  rationality: 1.0,
  belief_k: 400,
  budget: { total_evals: 6, init_random: 2 },
};

let server: ChildProcess;
let serverLog = "";

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 120_000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/sessions/warmup/query`);
      if (res.status === 404) {
        return;
      }
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service did not come up; log so far:\n${serverLog}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
}

beforeAll(async () => {
  server = spawn("prefdesign", ["serve", "--port", String(PORT)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stdout?.on("data", (chunk) => (serverLog += chunk));
  server.stderr?.on("data", (chunk) => (serverLog += chunk));
  await waitForServer();
}, 150_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("scripted live session", () => {
  it(
    "matches the headless replay belief bit for bit",
    async () => {
      const api = new ApiClient(BASE);
      const controller = new SessionController(api, () => {});
      await controller.start({
        domain: "gridnav",
        geometry_seed: 0,
        rounds: ANSWERS.length,
        learner: LEARNER,
      });
      expect(controller.current.phase).toBe("ready");

      // the gridnav payload renders with two distinguishable trajectories
      const ctx = new RecordingContext();
      drawScene(ctx, controller.current.view!, 520, 520);
      const routeA = ctx.polylines().filter((l) => l.stroke === TRAJECTORY_STYLE.a.stroke);
      const routeB = ctx.polylines().filter((l) => l.stroke === TRAJECTORY_STYLE.b.stroke);
      expect(routeA).toHaveLength(1);
      expect(routeB).toHaveLength(1);
      expect(routeA[0].dash).not.toEqual(routeB[0].dash);

      for (const choice of ANSWERS) {
        expect(controller.current.phase).toBe("ready");
        await controller.submit(choice as "A" | "B");
        expect(controller.current.error).toBeNull();
      }
      expect(controller.current.phase).toBe("done");
      expect(controller.current.completed).toBe(ANSWERS.length);

      const live = await api.getBelief(controller.id);

      const replay = spawnSync(
        "prefdesign",
        [
          "replay",
          "--method", LEARNER.method,
          "--seed", String(LEARNER.seed),
          "--rationality", String(LEARNER.rationality),
          "--belief-k", String(LEARNER.belief_k),
          "--geometry-seed", "0",
          "--answers", ANSWERS,
          "--learner-json", JSON.stringify({ budget: LEARNER.budget }),
        ],
        { encoding: "utf-8", maxBuffer: 64 * 1024 * 1024, timeout: 240_000 },
      );
      expect(replay.status, replay.stderr).toBe(0);
      const offline = JSON.parse(replay.stdout) as BeliefPayload;

      expect(live.d).toBe(offline.d);
      expect(live.seed).toBe(offline.seed);
      expect(Object.is(live.acceptance_rate, offline.acceptance_rate)).toBe(true);
      expect(live.samples.length).toBe(offline.samples.length);
      for (let i = 0; i < live.samples.length; i++) {
        for (let j = 0; j < live.d; j++) {
          expect(
            Object.is(live.samples[i][j], offline.samples[i][j]),
            `sample[${i}][${j}]: ${live.samples[i][j]} vs ${offline.samples[i][j]}`,
          ).toBe(true);
        }
      }
    },
    420_000,
  );

  it(
    "answers for a stale round get a conflict and history stays single",
    async () => {
      const api = new ApiClient(BASE);
      const created = await api.createSession({
        domain: "gridnav",
        geometry_seed: 0,
        rounds: 2,
        learner: { method: "RR", seed: 9, n_rollouts: 6, belief_k: 200 },
      });
      const view = buildViewModel(created.id, created.query);
      expect(view.round).toBe(1);
      await api.postAnswer(created.id, "A", 1);
      // double submit of round 1: the server must refuse, not re-apply
      await expect(api.postAnswer(created.id, "A", 1)).rejects.toMatchObject({
        status: 409,
        code: "round_conflict",
      });
      const history = await api.getHistory(created.id);
      expect(history.rounds).toHaveLength(1);
    },
    120_000,
  );
});
