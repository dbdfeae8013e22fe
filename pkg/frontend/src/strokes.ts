// Pointer capture and scripted stroke generation. A stroke is an ordered
// list of pointer samples; mapped to a demonstration in normalized canvas
// coordinates before posting.

import type { DemoPoint } from "./api.js";
import { canvasToNormalized, type Pt, type Size, type Zone } from "./geometry.js";

export interface StrokeSample {
  t_ms: number;
  x_px: number;
  y_px: number;
}

export class StrokeRecorder {
  private samples: StrokeSample[] = [];
  private active = false;

  begin(sample: StrokeSample): void {
    this.samples = [sample];
    this.active = true;
  }

  extend(sample: StrokeSample): void {
    if (!this.active) return;
    const last = this.samples[this.samples.length - 1];
    if (sample.t_ms === last.t_ms) return; // drop duplicate timestamps
    this.samples.push(sample);
  }

  finish(): StrokeSample[] | null {
    this.active = false;
    return this.samples.length >= 2 ? this.samples : null;
  }
}

export function strokeToDemo(samples: StrokeSample[], size: Size): DemoPoint[] {
  return samples.map((s) => {
    const p = canvasToNormalized({ x: s.x_px, y: s.y_px }, size);
    return { t: s.t_ms / 1000.0, y: [p.x, p.y] };
  });
}

// deterministic small PRNG so replays are reproducible in tests
export function makeLcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

/**
 * One scripted stroke: a gentle arc from a fixed start to the zone
 * center, with per-stroke jitter. Coordinates are normalized.
 */
export function scriptedStroke(
  target: Zone,
  rand: () => number,
  steps = 24,
): DemoPoint[] {
  const start: Pt = {
    x: 0.1 + 0.02 * (rand() - 0.5),
    y: 0.85 + 0.02 * (rand() - 0.5),
  };
  const end: Pt = {
    x: target.cx + 0.5 * target.radius * (2 * rand() - 1),
    y: target.cy + 0.5 * target.radius * (2 * rand() - 1),
  };
  const bend = 0.15 * (2 * rand() - 1);
  const points: DemoPoint[] = [];
  for (let i = 0; i < steps; i++) {
    const s = i / (steps - 1);
    const arc = Math.sin(Math.PI * s) * bend;
    points.push({
      t: s,
      y: [
        start.x + (end.x - start.x) * s - arc * (end.y - start.y),
        start.y + (end.y - start.y) * s + arc * (end.x - start.x),
      ],
    });
  }
  return points;
}

export const ZONE_ONE: Zone = { cx: 0.85, cy: 0.65, radius: 0.1 };
export const ZONE_TWO: Zone = { cx: 0.85, cy: 0.25, radius: 0.1 };

/** The two-position protocol: strokes to zone one, then to zone two. */
export function twoZoneScript(
  perSide = 15,
  seed = 7,
): { stroke: DemoPoint[]; zone: 1 | 2 }[] {
  const rand = makeLcg(seed);
  const out: { stroke: DemoPoint[]; zone: 1 | 2 }[] = [];
  for (let i = 0; i < perSide; i++) {
    out.push({ stroke: scriptedStroke(ZONE_ONE, rand), zone: 1 });
  }
  for (let i = 0; i < perSide; i++) {
    out.push({ stroke: scriptedStroke(ZONE_TWO, rand), zone: 2 });
  }
  return out;
}
