// App wiring: pointer capture, controls, websocket push, shift workflow.

import { ApiError, SessionApi, type StreamEvent } from "./api.js";
import { endpointCenter, type Size } from "./geometry.js";
import {
  StrokeRecorder,
  strokeToDemo,
  twoZoneScript,
  ZONE_ONE,
  ZONE_TWO,
  type StrokeSample,
} from "./strokes.js";
import {
  drawEndpointChart,
  drawScene,
  drawSparkline,
  freshViewState,
  pushGhost,
  recordUpdate,
} from "./view.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = byId<HTMLCanvasElement>("pad");
const ctx = canvas.getContext("2d")!;
const deltaSpark = byId<HTMLCanvasElement>("delta-spark");
const distSpark = byId<HTMLCanvasElement>("dist-spark");
const endpointChart = byId<HTMLCanvasElement>("endpoint-chart");
const statusLine = byId<HTMLSpanElement>("status");
const betaSlider = byId<HTMLInputElement>("beta");
const betaValue = byId<HTMLSpanElement>("beta-value");
const deltaMinInput = byId<HTMLInputElement>("delta-min");

const api = new SessionApi(location.origin);
const view = freshViewState();
let strokeEndpoints: number[] = [];
let socket: WebSocket | null = null;

function canvasSize(): Size {
  return { width: canvas.width, height: canvas.height };
}

function toast(message: string): void {
  statusLine.textContent = message;
  statusLine.classList.add("error");
  setTimeout(() => statusLine.classList.remove("error"), 2500);
}

function redraw(): void {
  drawScene(ctx, view, canvasSize());
  drawSparkline(deltaSpark.getContext("2d")!, view.deltas, {
    width: deltaSpark.width,
    height: deltaSpark.height,
  });
  drawSparkline(
    distSpark.getContext("2d")!,
    view.distances,
    { width: distSpark.width, height: distSpark.height },
    "#9333ea",
  );
  drawEndpointChart(
    endpointChart.getContext("2d")!,
    strokeEndpoints,
    view.endpointStream,
    { width: endpointChart.width, height: endpointChart.height },
  );
}

function handleEvent(event: StreamEvent): void {
  recordUpdate(view, event.envelope, event.delta, event.metrics);
  statusLine.textContent =
    `update ${event.n - 1}, step size ${event.delta.toFixed(4)}`;
  redraw();
}

async function startSession(): Promise<void> {
  if (view.sessionId && socket) {
    socket.close();
    socket = null;
  }
  const beta = parseFloat(betaSlider.value);
  const sessionId = await api.createSession({
    K: 8,
    D: 2,
    beta,
    delta_min: parseFloat(deltaMinInput.value) || 0,
  });
  view.sessionId = sessionId;
  view.envelope = [];
  view.ghosts = [];
  view.deltas = [];
  view.distances = [];
  view.endpointStream = [];
  strokeEndpoints = [];
  location.hash = sessionId;
  socket = api.openStream(sessionId, handleEvent);
  statusLine.textContent = `session ${sessionId.slice(0, 8)} ready`;
  redraw();
}

/** Re-render purely from the server: used on page load with a hash id. */
async function restoreSession(sessionId: string): Promise<void> {
  const doc = await api.getSession(sessionId);
  view.sessionId = sessionId;
  view.envelope = doc.envelope;
  view.deltas = doc.history.map((h) => h.delta);
  view.distances = doc.history
    .filter((h) => h.metrics)
    .map((h) => h.metrics!.d_b);
  socket = api.openStream(sessionId, handleEvent);
  statusLine.textContent = `restored session ${sessionId.slice(0, 8)}`;
  redraw();
}

async function submitStroke(samples: StrokeSample[]): Promise<void> {
  if (!view.sessionId) {
    toast("no session; press New Session");
    return;
  }
  const points = strokeToDemo(samples, canvasSize());
  try {
    const res = await api.postDemo(view.sessionId, points);
    pushGhost(view, samples);
    strokeEndpoints.push(points[points.length - 1].y[1]);
    // envelope redraw arrives via the websocket event as well; draw now
    recordUpdate(view, res.envelope, res.delta_used, res.metrics);
    redraw();
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      toast(`stroke rejected: ${err.message}`);
    } else {
      toast(String(err));
    }
  }
}

// pointer capture
const recorder = new StrokeRecorder();
let drawing = false;

canvas.addEventListener("pointerdown", (ev) => {
  drawing = true;
  canvas.setPointerCapture(ev.pointerId);
  recorder.begin({ t_ms: ev.timeStamp, x_px: ev.offsetX, y_px: ev.offsetY });
});

canvas.addEventListener("pointermove", (ev) => {
  if (!drawing) return;
  recorder.extend({ t_ms: ev.timeStamp, x_px: ev.offsetX, y_px: ev.offsetY });
  // live ink while drawing
  ctx.fillStyle = "#111827";
  ctx.fillRect(ev.offsetX - 1, ev.offsetY - 1, 2, 2);
});

canvas.addEventListener("pointerup", () => {
  drawing = false;
  const samples = recorder.finish();
  if (samples) void submitStroke(samples);
  else toast("stroke too short");
});

// controls
byId<HTMLButtonElement>("new-session").addEventListener("click", () => {
  void startSession();
});

byId<HTMLButtonElement>("reset").addEventListener("click", async () => {
  if (!view.sessionId) return;
  await api.reset(view.sessionId);
  view.envelope = [];
  view.ghosts = [];
  view.deltas = [];
  view.distances = [];
  view.endpointStream = [];
  strokeEndpoints = [];
  statusLine.textContent = "session reset";
  redraw();
});

betaSlider.addEventListener("input", () => {
  betaValue.textContent = betaSlider.value;
});

betaSlider.addEventListener("change", async () => {
  if (!view.sessionId) return;
  await api.patchConfig(view.sessionId, {
    beta: parseFloat(betaSlider.value),
  });
  statusLine.textContent = `step-size power set to ${betaSlider.value}`;
});

deltaMinInput.addEventListener("change", async () => {
  if (!view.sessionId) return;
  await api.patchConfig(view.sessionId, {
    delta_min: parseFloat(deltaMinInput.value) || 0,
  });
});

byId<HTMLButtonElement>("shift-mode").addEventListener("click", () => {
  view.zones = view.zones ? null : { one: ZONE_ONE, two: ZONE_TWO };
  statusLine.textContent = view.zones
    ? "shift workflow: demonstrate into zone 1, then zone 2"
    : "shift workflow off";
  redraw();
});

byId<HTMLButtonElement>("replay").addEventListener("click", async () => {
  if (!view.sessionId) await startSession();
  view.zones = { one: ZONE_ONE, two: ZONE_TWO };
  const size = canvasSize();
  for (const { stroke } of twoZoneScript(15)) {
    const samples: StrokeSample[] = stroke.map((p) => ({
      t_ms: p.t * 1000,
      x_px: p.y[0] * size.width,
      y_px: p.y[1] * size.height,
    }));
    await submitStroke(samples);
    await new Promise((resolve) => setTimeout(resolve, 60));
  }
  const end = endpointCenter(view.envelope);
  statusLine.textContent =
    `replay done; tube endpoint at (${end.x.toFixed(2)}, ${end.y.toFixed(2)})`;
});

// boot: restore from the URL hash if present (reload keeps the session)
const hash = location.hash.replace(/^#/, "");
if (hash) {
  restoreSession(hash).catch(() => {
    location.hash = "";
    statusLine.textContent = "session gone; press New Session";
  });
} else {
  statusLine.textContent = "press New Session to begin";
}
