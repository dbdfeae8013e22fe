// Pure coordinate math: canvas <-> normalized mapping, the tube polygon,
// and endpoint helpers. Everything here is deterministic so a re-render
// from the same server envelope produces identical coordinates.

import type { EnvelopePoint } from "./api.js";

export interface Size {
  width: number;
  height: number;
}

export interface Pt {
  x: number;
  y: number;
}

export function canvasToNormalized(p: Pt, size: Size): Pt {
  return { x: p.x / size.width, y: p.y / size.height };
}

export function normalizedToCanvas(p: Pt, size: Size): Pt {
  return { x: p.x * size.width, y: p.y * size.height };
}

/** Mean polyline of the envelope in canvas coordinates. */
export function meanPolyline(envelope: EnvelopePoint[], size: Size): Pt[] {
  return envelope.map((e) =>
    normalizedToCanvas({ x: e.mean[0], y: e.mean[1] }, size),
  );
}

/**
 * Closed tube polygon: the mean polyline offset along its normals by the
 * per-DOF two-sigma half-widths projected onto the normal direction.
 * Forward pass on one side, backward pass on the other.
 */
export function tubePolygon(envelope: EnvelopePoint[], size: Size): Pt[] {
  const mean = meanPolyline(envelope, size);
  const n = mean.length;
  if (n < 2) return [];
  const upper: Pt[] = [];
  const lower: Pt[] = [];
  for (let i = 0; i < n; i++) {
    const prev = mean[Math.max(0, i - 1)];
    const next = mean[Math.min(n - 1, i + 1)];
    let tx = next.x - prev.x;
    let ty = next.y - prev.y;
    const len = Math.hypot(tx, ty);
    if (len > 0) {
      tx /= len;
      ty /= len;
    } else {
      tx = 1;
      ty = 0;
    }
    const nx = -ty;
    const ny = tx;
    const rx = envelope[i].std2[0] * size.width;
    const ry = envelope[i].std2[1] * size.height;
    const r = Math.hypot(nx * rx, ny * ry);
    upper.push({ x: mean[i].x + r * nx, y: mean[i].y + r * ny });
    lower.push({ x: mean[i].x - r * nx, y: mean[i].y - r * ny });
  }
  return upper.concat(lower.reverse());
}

/** Center of the rendered tube's end, in normalized coordinates. */
export function endpointCenter(envelope: EnvelopePoint[]): Pt {
  const last = envelope[envelope.length - 1];
  return { x: last.mean[0], y: last.mean[1] };
}

export interface Zone {
  cx: number;
  cy: number;
  radius: number;
}

export function insideZone(p: Pt, zone: Zone): boolean {
  return Math.hypot(p.x - zone.cx, p.y - zone.cy) <= zone.radius;
}

/** Mean half-width of the tube (normalized units), a narrowness score. */
export function meanTubeWidth(envelope: EnvelopePoint[]): number {
  let total = 0;
  for (const e of envelope) {
    total += Math.hypot(e.std2[0], e.std2[1]);
  }
  return total / envelope.length;
}
