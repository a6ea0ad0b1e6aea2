import { ApiClient } from "./api.js";
import { ControllerState, SessionController } from "./controller.js";
import { drawBars, drawScene, legendLabels, paletteFor } from "./render.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function sessionPayloadFromUrl(): object {
  const params = new URLSearchParams(window.location.search);
  const payload: Record<string, unknown> = {
    domain: params.get("domain") ?? "gridnav",
    geometry_seed: Number(params.get("geometry_seed") ?? "0"),
    rounds: Number(params.get("rounds") ?? "6"),
    learner: {
      method: params.get("method") ?? "CRED",
      seed: Number(params.get("seed") ?? "0"),
      rationality: Number(params.get("rationality") ?? "1.0"),
      belief_k: Number(params.get("belief_k") ?? "1000"),
    },
  };
  const horizon = params.get("horizon");
  if (horizon !== null) {
    payload.horizon = Number(horizon);
  }
  // demo mode: pass a ground-truth weight vector to see a live alignment
  // score, e.g. ?gt=-0.6,0.2,0.5,-0.1,0.3
  const gt = params.get("gt");
  if (gt !== null) {
    payload.ground_truth = gt.split(",").map(Number);
  }
  return payload;
}

function renderLegend(container: HTMLElement, labels: string[], palette: string[]): void {
  container.replaceChildren();
  labels.forEach((label, i) => {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.style.background = palette[i];
    const item = document.createElement("span");
    item.className = "legend-item";
    item.append(chip, label);
    container.append(item);
  });
}

function main(): void {
  const scene = byId<HTMLCanvasElement>("scene");
  const bars = byId<HTMLCanvasElement>("bars");
  const banner = byId<HTMLDivElement>("banner");
  const bannerText = byId<HTMLSpanElement>("banner-text");
  const retryButton = byId<HTMLButtonElement>("retry");
  const chooseA = byId<HTMLButtonElement>("choose-a");
  const chooseB = byId<HTMLButtonElement>("choose-b");
  const progress = byId<HTMLSpanElement>("progress");
  const badge = byId<HTMLSpanElement>("overlap-badge");
  const legend = byId<HTMLDivElement>("legend");
  const summary = byId<HTMLDivElement>("summary");
  const alignment = byId<HTMLSpanElement>("alignment");

  const sceneCtx = scene.getContext("2d");
  const barsCtx = bars.getContext("2d");
  if (sceneCtx === null || barsCtx === null) {
    throw new Error("canvas 2d context unavailable");
  }

  const controller = new SessionController(new ApiClient(""), (state) => {
    render(state);
  });

  function render(state: ControllerState): void {
    const busy = state.phase !== "ready";
    chooseA.disabled = busy;
    chooseB.disabled = busy;
    banner.hidden = state.phase !== "error";
    retryButton.hidden = !state.canRetry;
    if (state.error !== null) {
      bannerText.textContent = state.error;
    }
    progress.textContent = `${state.completed}/${state.roundsTotal || "?"}`;
    badge.hidden = !(state.view?.identical ?? false);

    if (state.view !== null) {
      drawScene(sceneCtx!, state.view, scene.width, scene.height);
      renderLegend(legend, legendLabels(state.view.environment), paletteFor(state.view.environment));
      if (state.posteriorMean !== null) {
        drawBars(
          barsCtx!, state.view.environment.feature_names, state.posteriorMean,
          bars.width, bars.height,
        );
      }
    }
    if (state.correlation !== null) {
      alignment.textContent = `alignment ${state.correlation.toFixed(3)}`;
      alignment.hidden = false;
    }
    summary.hidden = state.phase !== "done";
    if (state.phase === "done") {
      summary.textContent =
        `All ${state.roundsTotal} comparisons answered. ` +
        "The weight chart shows the learned preference profile.";
    }
  }

  chooseA.addEventListener("click", () => void controller.submit("A"));
  chooseB.addEventListener("click", () => void controller.submit("B"));
  retryButton.addEventListener("click", () => void controller.retry());

  void controller.start(sessionPayloadFromUrl());
}

main();
