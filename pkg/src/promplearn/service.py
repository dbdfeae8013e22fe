"""HTTP + WebSocket service hosting live incremental-learning sessions.

Each session owns one stepwise-EM state machine. Demo posts are applied
under a per-session FIFO lock (queued, bounded, never interleaved);
readers always see the latest committed snapshot because updates swap in
a fresh state object. Raw strokes are resampled to a uniform 50-point
phase grid before entering the learner, so equal drawings give equal
updates regardless of pointer-event timing.
"""

import asyncio
import time
import uuid
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import io as promp_io
from .basis import BasisConfig
from .errors import PrompLearnError, SingularCovariance
from .incremental import StepwiseConfig, add_demonstration, init_session, step_size
from .metrics import compare_to_reference
from .model import Demonstration, marginal_at_phase

RESAMPLE_POINTS = 50
HISTORY_LIMIT = 200
DEFAULT_QUEUE_LIMIT = 16


class CreateSessionBody(BaseModel):
    K: int = Field(default=8, ge=1, le=100)
    D: int = Field(default=2, ge=1, le=16)
    beta: float = 0.75
    delta_min: float = 0.0
    minibatch_size: int = 1
    reference: dict | None = None


class DemoPoint(BaseModel):
    t: float
    y: list[float]


class PostDemoBody(BaseModel):
    points: list[DemoPoint]


class PatchConfigBody(BaseModel):
    beta: float | None = None
    delta_min: float | None = None


@dataclass(eq=False)
class Session:
    id: str
    state: object
    reference: object | None = None
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    waiting: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_LIMIT))
    subscribers: list = field(default_factory=list)
    prev_sigma_w: np.ndarray | None = None
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)


def resample_stroke(points, n_dof, grid_points=RESAMPLE_POINTS):
    """Uniform-phase resampling of raw (t, y) samples; duplicates in t are
    dropped. Raises ValueError on malformed strokes."""
    if len(points) < 2:
        raise ValueError("a demonstration needs at least 2 points")
    ts, ys = [], []
    for p in points:
        if len(p.y) != n_dof:
            raise ValueError(f"each point needs {n_dof} state values")
        if ts and p.t == ts[-1]:
            continue
        ts.append(p.t)
        ys.append(p.y)
    if len(ts) < 2:
        raise ValueError("a demonstration needs at least 2 distinct timestamps")
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(np.diff(ts) <= 0):
        raise ValueError("timestamps must be increasing")
    phase_in = (ts - ts[0]) / (ts[-1] - ts[0])
    grid = np.linspace(0.0, 1.0, grid_points)
    states = np.column_stack([np.interp(grid, phase_in, ys[:, d])
                              for d in range(n_dof)])
    return Demonstration(timestamps=grid.copy(), states=states, phases=grid)


def envelope_points(params, samples=RESAMPLE_POINTS):
    """Phase grid of mean and two-standard-deviation half-widths per DOF."""
    zs = np.linspace(0.0, 1.0, samples)
    out = []
    for z in zs:
        mean, cov = marginal_at_phase(params, z)
        std2 = 2.0 * np.sqrt(np.clip(np.diag(cov), 0.0, None))
        out.append({"z": float(z), "mean": [float(v) for v in mean],
                    "std2": [float(v) for v in std2]})
    return out


def create_app(snapshot_dir=None, cors_origin=None, ui_dir=None,
               queue_limit=DEFAULT_QUEUE_LIMIT, snapshot_interval=30.0):
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app):
        task = None
        if snapshot_dir is not None:
            async def loop():
                while True:
                    await asyncio.sleep(snapshot_interval)
                    app.state.snapshot_all()
            task = asyncio.create_task(loop())
        yield
        if task is not None:
            task.cancel()

    app = FastAPI(title="promplearn session service", lifespan=lifespan)
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    if cors_origin:
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])

    def get_session(session_id) -> Session:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return sess

    @app.exception_handler(PrompLearnError)
    async def numerical_error_handler(_, exc):
        code = 500 if isinstance(exc, SingularCovariance) else 422
        return JSONResponse(status_code=code, content={
            "error": {"type": type(exc).__name__, "message": str(exc)}})

    @app.post("/sessions")
    async def create_session(body: CreateSessionBody):
        basis = BasisConfig.create(body.K, body.D)
        try:
            cfg = StepwiseConfig(beta=body.beta, delta_min=body.delta_min,
                                 minibatch_size=body.minibatch_size)
            state = init_session(cfg, basis)
        except PrompLearnError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        reference = None
        if body.reference is not None:
            try:
                reference, _ = promp_io.params_from_dict(body.reference)
            except PrompLearnError as exc:
                raise HTTPException(status_code=422,
                                    detail=f"bad reference: {exc}")
            if reference.basis.n_dof != body.D:
                raise HTTPException(status_code=422,
                                    detail="reference dimension mismatch")
        sid = uuid.uuid4().hex
        sessions[sid] = Session(id=sid, state=state, reference=reference)
        return {"session_id": sid}

    async def apply_update(sess: Session, demo):
        if sess.waiting >= queue_limit:
            raise HTTPException(status_code=429, detail="update queue full")
        sess.waiting += 1
        try:
            async with sess.lock:
                new_state, payload = add_demonstration(sess.state, demo)
                sess.state = new_state
                sess.updated = time.time()
                entry = {"n": payload.n, "delta": payload.delta_used,
                         "t_prime": payload.t_prime}
                if sess.reference is not None:
                    rep = compare_to_reference(sess.reference,
                                               new_state.params,
                                               prev_sigma_w=sess.prev_sigma_w)
                    entry["metrics"] = {
                        "d_b": rep.d_b, "e_f_mu": rep.e_f_mu,
                        "e_f_sigma": rep.e_f_sigma,
                        "log_kappa": rep.log_kappa,
                        "pc_rotation_deg": rep.pc_rotation_deg,
                    }
                sess.prev_sigma_w = new_state.params.sigma_w
                sess.history.append(entry)
                event = dict(entry)
                event["envelope"] = envelope_points(new_state.params)
                for queue in list(sess.subscribers):
                    queue.put_nowait(event)
                return entry, event["envelope"]
        finally:
            sess.waiting -= 1

    @app.post("/sessions/{session_id}/demos")
    async def post_demo(session_id: str, body: PostDemoBody):
        sess = get_session(session_id)
        n_dof = sess.state.params.basis.n_dof
        try:
            demo = resample_stroke(body.points, n_dof)
        except (ValueError, PrompLearnError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            entry, envelope = await apply_update(sess, demo)
        except SingularCovariance as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return {"n": entry["n"], "delta_used": entry["delta"],
                "metrics": entry.get("metrics"), "envelope": envelope}

    @app.get("/sessions/{session_id}")
    async def get_session_doc(session_id: str):
        sess = get_session(session_id)
        doc = promp_io.params_to_dict(sess.state.params, sess.state)
        doc["session_id"] = sess.id
        doc["envelope"] = envelope_points(sess.state.params)
        doc["history"] = list(sess.history)
        return doc

    @app.get("/sessions/{session_id}/envelope")
    async def get_envelope(session_id: str,
                           samples: int = Query(default=RESAMPLE_POINTS,
                                                ge=2, le=1000)):
        sess = get_session(session_id)
        return {"session_id": sess.id,
                "envelope": envelope_points(sess.state.params, samples)}

    @app.post("/sessions/{session_id}/reset")
    async def reset_session(session_id: str):
        sess = get_session(session_id)
        async with sess.lock:
            basis = sess.state.params.basis
            sess.state = init_session(sess.state.config, basis)
            sess.history.clear()
            sess.prev_sigma_w = None
            sess.updated = time.time()
        return {"session_id": sess.id, "n": sess.state.n}

    @app.patch("/sessions/{session_id}/config")
    async def patch_config(session_id: str, body: PatchConfigBody):
        sess = get_session(session_id)
        async with sess.lock:
            state = sess.state
            cfg = state.config
            beta = body.beta if body.beta is not None else cfg.beta
            delta_min = (body.delta_min if body.delta_min is not None
                         else cfg.delta_min)
            try:
                new_cfg = StepwiseConfig(
                    beta=beta, prior=cfg.prior, init_mu=cfg.init_mu,
                    init_sigma_w=cfg.init_sigma_w,
                    init_sigma_y=cfg.init_sigma_y,
                    minibatch_size=cfg.minibatch_size, delta_min=delta_min,
                    sigma_star_uses_mle_mean=cfg.sigma_star_uses_mle_mean,
                    s0_freeze=cfg.s0_freeze)
            except PrompLearnError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            state.config = new_cfg
            state.delta = step_size(state.n, beta, delta_min)
        return {"session_id": sess.id, "beta": beta, "delta_min": delta_min}

    @app.delete("/sessions/{session_id}")
    async def delete_session(session_id: str):
        sess = get_session(session_id)
        for queue in list(sess.subscribers):
            queue.put_nowait(None)
        del sessions[session_id]
        return {"deleted": session_id}

    @app.websocket("/sessions/{session_id}/stream")
    async def ws_stream(websocket: WebSocket, session_id: str):
        sess = sessions.get(session_id)
        if sess is None:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        sess.subscribers.append(queue)
        try:
            while True:
                event = await queue.get()
                if event is None:
                    break
                await websocket.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            if queue in sess.subscribers:
                sess.subscribers.remove(queue)
            try:
                await websocket.close()
            except RuntimeError:
                pass

    def snapshot_all():
        """Write every live session to the snapshot directory."""
        if snapshot_dir is None:
            return []
        from pathlib import Path
        directory = Path(snapshot_dir)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for sess in list(sessions.values()):
            path = directory / f"session_{sess.id}.json"
            promp_io.save_promp(path, sess.state.params, sess.state)
            written.append(str(path))
        return written

    app.state.snapshot_all = snapshot_all

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(port=8000, host="127.0.0.1", snapshot_dir=None, cors_origin=None,
          ui_dir=None):
    import uvicorn
    app = create_app(snapshot_dir=snapshot_dir, cors_origin=cors_origin,
                     ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
