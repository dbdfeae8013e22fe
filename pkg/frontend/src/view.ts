// Rendering and view state. The overlay is regenerated from the server
// envelope only; no model math happens here beyond coordinate mapping.

import type { EnvelopePoint, UpdateMetrics } from "./api.js";
import {
  endpointCenter,
  meanPolyline,
  normalizedToCanvas,
  tubePolygon,
  type Pt,
  type Size,
  type Zone,
} from "./geometry.js";
import type { StrokeSample } from "./strokes.js";

const GHOST_LIMIT = 10;

export interface ViewState {
  sessionId: string | null;
  envelope: EnvelopePoint[];
  ghosts: StrokeSample[][];
  deltas: number[];
  distances: number[]; // d_b sparkline when a reference is attached
  endpointStream: number[]; // per-update endpoint y of the model mean
  zones: { one: Zone; two: Zone } | null;
}

export function freshViewState(): ViewState {
  return {
    sessionId: null,
    envelope: [],
    ghosts: [],
    deltas: [],
    distances: [],
    endpointStream: [],
    zones: null,
  };
}

export function recordUpdate(
  view: ViewState,
  envelope: EnvelopePoint[],
  delta: number,
  metrics: UpdateMetrics | null | undefined,
): void {
  view.envelope = envelope;
  view.deltas.push(delta);
  if (metrics) view.distances.push(metrics.d_b);
  if (envelope.length > 0) {
    view.endpointStream.push(endpointCenter(envelope).y);
  }
}

export function pushGhost(view: ViewState, stroke: StrokeSample[]): void {
  view.ghosts.push(stroke);
  if (view.ghosts.length > GHOST_LIMIT) view.ghosts.shift();
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  size: Size,
): void {
  ctx.clearRect(0, 0, size.width, size.height);

  if (view.zones) {
    drawZone(ctx, view.zones.one, size, "#3b82f680", "1");
    drawZone(ctx, view.zones.two, size, "#ef444480", "2");
  }

  // stroke ghosts fade with age: oldest faintest, so forgetting is visible
  view.ghosts.forEach((ghost, i) => {
    const age = view.ghosts.length - i;
    ctx.strokeStyle = `rgba(120, 120, 130, ${Math.max(0.08, 0.8 - 0.08 * age)})`;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ghost.forEach((s, j) => {
      if (j === 0) ctx.moveTo(s.x_px, s.y_px);
      else ctx.lineTo(s.x_px, s.y_px);
    });
    ctx.stroke();
  });

  if (view.envelope.length >= 2) {
    const tube = tubePolygon(view.envelope, size);
    ctx.fillStyle = "rgba(100, 140, 240, 0.25)";
    ctx.beginPath();
    tube.forEach((p, i) => {
      if (i === 0) ctx.moveTo(p.x, p.y);
      else ctx.lineTo(p.x, p.y);
    });
    ctx.closePath();
    ctx.fill();

    const mean = meanPolyline(view.envelope, size);
    ctx.strokeStyle = "#1d4ed8";
    ctx.lineWidth = 2.5;
    ctx.beginPath();
    mean.forEach((p, i) => {
      if (i === 0) ctx.moveTo(p.x, p.y);
      else ctx.lineTo(p.x, p.y);
    });
    ctx.stroke();
  }
}

function drawZone(
  ctx: CanvasRenderingContext2D,
  zone: Zone,
  size: Size,
  color: string,
  label: string,
): void {
  const c = normalizedToCanvas({ x: zone.cx, y: zone.cy }, size);
  const r = zone.radius * Math.min(size.width, size.height);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.setLineDash([6, 4]);
  ctx.beginPath();
  ctx.arc(c.x, c.y, r, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.fillStyle = color;
  ctx.font = "14px sans-serif";
  ctx.fillText(label, c.x - 4, c.y + 5);
}

export function drawSparkline(
  ctx: CanvasRenderingContext2D,
  values: number[],
  size: Size,
  color = "#0f766e",
): void {
  ctx.clearRect(0, 0, size.width, size.height);
  if (values.length < 2) return;
  const max = Math.max(...values);
  const min = Math.min(...values);
  const span = max - min || 1;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = (i / (values.length - 1)) * size.width;
    const y = size.height - ((v - min) / span) * (size.height - 4) - 2;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

/**
 * Endpoint-vs-update chart for the task-shift workflow: per-stroke
 * endpoints as dots, the model's mean endpoint as a line.
 */
export function drawEndpointChart(
  ctx: CanvasRenderingContext2D,
  strokeEndpoints: number[],
  modelEndpoints: number[],
  size: Size,
): void {
  ctx.clearRect(0, 0, size.width, size.height);
  const n = Math.max(strokeEndpoints.length, modelEndpoints.length);
  if (n < 2) return;
  const toXY = (i: number, v: number): Pt => ({
    x: (i / (n - 1)) * (size.width - 8) + 4,
    y: v * (size.height - 8) + 4,
  });
  ctx.fillStyle = "#475569";
  strokeEndpoints.forEach((v, i) => {
    const p = toXY(i, v);
    ctx.beginPath();
    ctx.arc(p.x, p.y, 2, 0, 2 * Math.PI);
    ctx.fill();
  });
  ctx.strokeStyle = "#dc2626";
  ctx.lineWidth = 2;
  ctx.beginPath();
  modelEndpoints.forEach((v, i) => {
    const p = toXY(i, v);
    if (i === 0) ctx.moveTo(p.x, p.y);
    else ctx.lineTo(p.x, p.y);
  });
  ctx.stroke();
}
