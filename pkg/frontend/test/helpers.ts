import { Canvas2D } from "../src/render.js";
import { QueryPayload } from "../src/types.js";

export type DrawOp =
  | { op: "beginPath" }
  | { op: "moveTo"; x: number; y: number }
  | { op: "lineTo"; x: number; y: number }
  | { op: "stroke"; stroke: string; width: number; dash: number[] }
  | { op: "arc"; x: number; y: number; r: number }
  | { op: "fill"; fill: string }
  | { op: "fillRect"; x: number; y: number; w: number; h: number; fill: string }
  | { op: "clearRect" }
  | { op: "fillText"; text: string; x: number; y: number }
  | { op: "setLineDash"; dash: number[] };

/** Records drawing calls so tests can assert on the produced scene. */
export class RecordingContext implements Canvas2D {
  lineWidth = 1;
  strokeStyle: string | CanvasGradient | CanvasPattern = "#000";
  fillStyle: string | CanvasGradient | CanvasPattern = "#000";
  font = "";
  textAlign: CanvasTextAlign = "start";
  textBaseline: CanvasTextBaseline = "alphabetic";
  ops: DrawOp[] = [];
  private dash: number[] = [];

  beginPath(): void {
    this.ops.push({ op: "beginPath" });
  }
  moveTo(x: number, y: number): void {
    this.ops.push({ op: "moveTo", x, y });
  }
  lineTo(x: number, y: number): void {
    this.ops.push({ op: "lineTo", x, y });
  }
  stroke(): void {
    this.ops.push({
      op: "stroke",
      stroke: String(this.strokeStyle),
      width: this.lineWidth,
      dash: [...this.dash],
    });
  }
  arc(x: number, y: number, r: number): void {
    this.ops.push({ op: "arc", x, y, r });
  }
  fill(): void {
    this.ops.push({ op: "fill", fill: String(this.fillStyle) });
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ op: "fillRect", x, y, w, h, fill: String(this.fillStyle) });
  }
  clearRect(): void {
    this.ops.push({ op: "clearRect" });
  }
  fillText(text: string, x: number, y: number): void {
    this.ops.push({ op: "fillText", text, x, y });
  }
  setLineDash(segments: number[]): void {
    this.dash = [...segments];
    this.ops.push({ op: "setLineDash", dash: [...segments] });
  }

  /** Vertices of each stroked polyline, with the style it was stroked in. */
  polylines(): { points: { x: number; y: number }[]; stroke: string; dash: number[] }[] {
    const out: { points: { x: number; y: number }[]; stroke: string; dash: number[] }[] = [];
    let current: { x: number; y: number }[] = [];
    for (const op of this.ops) {
      if (op.op === "beginPath") {
        current = [];
      } else if (op.op === "moveTo" || op.op === "lineTo") {
        current.push({ x: op.x, y: op.y });
      } else if (op.op === "stroke" && current.length > 0) {
        out.push({ points: current, stroke: op.stroke, dash: op.dash });
        current = [];
      }
    }
    return out;
  }
}

/** A hand-checkable 2x2 gridnav query: 4 nodes, 4 edges, 2 routes. */
export function tinyQuery(): QueryPayload {
  return {
    round: 1,
    rounds_total: 6,
    theta: [0.5],
    environment: {
      kind: "gridnav",
      start: 0,
      goal: 3,
      nodes: [[0, 0], [0, 1], [1, 0], [1, 1]],
      feature_names: ["length_km", "paved_km", "grass_km", "asphalt_km", "concrete_km"],
      theta: [0.5],
      horizon: 8,
      terrains: ["paved", "grass", "asphalt", "concrete", "brick"],
      edges: [
        { u: 0, v: 1, length_m: 120, terrain: 0 },
        { u: 0, v: 2, length_m: 150, terrain: 2 },
        { u: 1, v: 3, length_m: 95, terrain: 4 },
        { u: 2, v: 3, length_m: 200, terrain: 3 },
      ],
    },
    provenance: "test-fixture",
    gain_bits: 0.4,
    trajectory_a: [0, 1, 3],
    trajectory_b: [0, 2, 3],
    features_a: [0.215, 0.12, 0.0, 0.0, 0.0],
    features_b: [0.35, 0.0, 0.0, 0.15, 0.2],
  };
}
