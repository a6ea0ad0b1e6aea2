import { EnvironmentPayload } from "./types.js";
import { ViewModel } from "./view.js";

// Structural subset of CanvasRenderingContext2D. The real context satisfies
// it, and tests substitute a recording stub.
export interface Canvas2D {
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

// Index-aligned with the terrain list the server sends; the legend is built
// from the same arrays so map and legend cannot drift apart.
export const TERRAIN_PALETTE = ["#9e9e9e", "#5aa65c", "#3b3b3f", "#c9c0a8", "#b04a42"];
export const CATEGORY_PALETTE = ["#f2f2f2", "#5aa65c", "#b04a42", "#c9c0a8", "#3b3b3f"];

export const TRAJECTORY_STYLE = {
  a: { stroke: "#1565d8", dash: [] as number[], offset: -5 },
  b: { stroke: "#e8710a", dash: [9, 6], offset: 5 },
};

const EDGE_WIDTH = 7;
const NODE_RADIUS = 6;
const MARGIN = 34;

export function paletteFor(env: EnvironmentPayload): string[] {
  return env.kind === "gridnav" ? TERRAIN_PALETTE : CATEGORY_PALETTE;
}

export function legendLabels(env: EnvironmentPayload): string[] {
  const labels = env.kind === "gridnav" ? env.terrains : env.categories;
  return labels ? [...labels] : [];
}

type Layout = {
  x: (node: number) => number;
  y: (node: number) => number;
};

function gridLayout(env: EnvironmentPayload, width: number, height: number): Layout {
  let maxRow = 0;
  let maxCol = 0;
  for (const [r, c] of env.nodes) {
    maxRow = Math.max(maxRow, r);
    maxCol = Math.max(maxCol, c);
  }
  const stepX = (width - 2 * MARGIN) / Math.max(maxCol, 1);
  const stepY = (height - 2 * MARGIN) / Math.max(maxRow, 1);
  return {
    x: (node) => MARGIN + env.nodes[node][1] * stepX,
    y: (node) => MARGIN + env.nodes[node][0] * stepY,
  };
}

function drawPolyline(
  ctx: Canvas2D,
  layout: Layout,
  states: number[],
  stroke: string,
  dash: number[],
  offset: number,
): void {
  ctx.strokeStyle = stroke;
  ctx.lineWidth = 3.5;
  ctx.setLineDash(dash);
  ctx.beginPath();
  for (let i = 0; i + 1 < states.length; i++) {
    const x1 = layout.x(states[i]);
    const y1 = layout.y(states[i]);
    const x2 = layout.x(states[i + 1]);
    const y2 = layout.y(states[i + 1]);
    const len = Math.hypot(x2 - x1, y2 - y1) || 1;
    // shift sideways so overlapping segments of A and B stay both visible
    const nx = (-(y2 - y1) / len) * offset;
    const ny = ((x2 - x1) / len) * offset;
    ctx.moveTo(x1 + nx, y1 + ny);
    ctx.lineTo(x2 + nx, y2 + ny);
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawEndpoints(ctx: Canvas2D, layout: Layout, env: EnvironmentPayload): void {
  ctx.font = "bold 12px sans-serif";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (const [node, label, color] of [
    [env.start, "S", "#1b7b33"],
    [env.goal, "G", "#7b1b60"],
  ] as const) {
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(layout.x(node), layout.y(node), NODE_RADIUS + 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#ffffff";
    ctx.fillText(label, layout.x(node), layout.y(node));
  }
}

function drawGridnav(ctx: Canvas2D, env: EnvironmentPayload, layout: Layout): void {
  for (const edge of env.edges ?? []) {
    ctx.strokeStyle = TERRAIN_PALETTE[edge.terrain];
    ctx.lineWidth = EDGE_WIDTH;
    ctx.setLineDash([]);
    ctx.beginPath();
    ctx.moveTo(layout.x(edge.u), layout.y(edge.u));
    ctx.lineTo(layout.x(edge.v), layout.y(edge.v));
    ctx.stroke();
  }
  ctx.fillStyle = "#ffffff";
  for (let node = 0; node < env.nodes.length; node++) {
    ctx.beginPath();
    ctx.arc(layout.x(node), layout.y(node), NODE_RADIUS, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawTabletop(
  ctx: Canvas2D,
  env: EnvironmentPayload,
  layout: Layout,
  width: number,
  height: number,
): void {
  const cells = env.cells ?? [];
  const rows = cells.length;
  const cols = rows > 0 ? cells[0].length : 0;
  const cellW = (width - 2 * MARGIN) / Math.max(cols, 1);
  const cellH = (height - 2 * MARGIN) / Math.max(rows, 1);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      ctx.fillStyle = CATEGORY_PALETTE[cells[r][c]];
      ctx.fillRect(MARGIN + c * cellW - cellW / 2, MARGIN + r * cellH - cellH / 2, cellW - 1, cellH - 1);
    }
  }
  ctx.fillStyle = "#666666";
  for (let node = 0; node < env.nodes.length; node++) {
    ctx.beginPath();
    ctx.arc(layout.x(node), layout.y(node), 2, 0, 2 * Math.PI);
    ctx.fill();
  }
}

/**
 * Draw the environment and both candidate trajectories. A is solid blue and
 * is nudged to one side of each edge, B is dashed orange nudged to the
 * other, so they stay distinguishable even when they share every segment.
 */
export function drawScene(ctx: Canvas2D, view: ViewModel, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fcfcfa";
  ctx.fillRect(0, 0, width, height);
  const env = view.environment;
  const layout = gridLayout(env, width, height);
  if (env.kind === "gridnav") {
    drawGridnav(ctx, env, layout);
  } else {
    drawTabletop(ctx, env, layout, width, height);
  }
  drawPolyline(
    ctx, layout, view.trajectoryA,
    TRAJECTORY_STYLE.a.stroke, TRAJECTORY_STYLE.a.dash, TRAJECTORY_STYLE.a.offset,
  );
  drawPolyline(
    ctx, layout, view.trajectoryB,
    TRAJECTORY_STYLE.b.stroke, TRAJECTORY_STYLE.b.dash, TRAJECTORY_STYLE.b.offset,
  );
  drawEndpoints(ctx, layout, env);
}

/** Horizontal bar chart of the posterior-mean weight per feature. */
export function drawBars(
  ctx: Canvas2D,
  names: string[],
  values: number[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fcfcfa";
  ctx.fillRect(0, 0, width, height);
  if (names.length === 0) {
    return;
  }
  const rowH = height / names.length;
  const mid = width * 0.55;
  const span = width * 0.4;
  ctx.strokeStyle = "#d0d0d0";
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  ctx.beginPath();
  ctx.moveTo(mid, 4);
  ctx.lineTo(mid, height - 4);
  ctx.stroke();
  ctx.font = "11px sans-serif";
  ctx.textBaseline = "middle";
  for (let i = 0; i < names.length; i++) {
    const y = (i + 0.5) * rowH;
    const v = Math.max(-1, Math.min(1, values[i] ?? 0));
    ctx.fillStyle = v >= 0 ? "#1565d8" : "#e8710a";
    const w = Math.abs(v) * span;
    ctx.fillRect(v >= 0 ? mid : mid - w, y - rowH * 0.28, w, rowH * 0.56);
    ctx.fillStyle = "#333333";
    ctx.textAlign = "right";
    ctx.fillText(names[i], mid - span - 8, y);
    ctx.textAlign = "left";
    ctx.fillText(v.toFixed(2), mid + span + 8, y);
  }
}
