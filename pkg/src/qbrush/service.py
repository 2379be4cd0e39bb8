"""HTTP/JSON service: sessions with canvases, async effect jobs, family store.

Steerable training is slow relative to a request, so effects run as jobs the
client polls (queued -> running -> done|failed, monotone progress).  A
finished steerable job keeps its trained steering cached on the session
(LRU, capacity 4) so the t slider can re-evaluate without retraining:
``POST .../steerable/{train_id}/evaluate {"t": ...}`` recomputes the paste
region from the canvas snapshot taken at training time, replaces the session
canvas, and returns the full canvas as PNG.  Undo restores the exact bytes
from before the effect (evaluations revise the same application rather than
stacking undo entries).

Environment: QBRUSH_DATA_DIR (family store), QBRUSH_PORT (default 8080),
QBRUSH_MAX_DIM (default 4096).  Errors are {code, message, detail}.
"""

from __future__ import annotations

import os
import secrets
import threading
from collections import OrderedDict, deque
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any

from fastapi import Body, FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import control as ctl
from .brushes import (
    CanvasImage,
    RegionError,
    SchemaError,
    SteerableApplication,
    apply_chemical,
    parse_chemical_params,
    parse_region,
    parse_steerable_params,
    parse_stroke,
    prepare_steerable,
)
from .colorsvd import DegenerateRegionError, RegionTooSmallError
from .vqe import FamilyStore, FamilyStoreEmptyError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
UNDO_DEPTH = 16
TRAINED_CACHE_CAPACITY = 4

DEFAULT_PORT = 8080
DEFAULT_MAX_DIM = 4096


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


@dataclass
class Session:
    id: str
    canvas: CanvasImage
    undo_stack: deque = field(default_factory=lambda: deque(maxlen=UNDO_DEPTH))
    trained: "OrderedDict[str, SteerableApplication]" = field(default_factory=OrderedDict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def cache_trained(self, train_id: str, app: SteerableApplication) -> None:
        self.trained[train_id] = app
        while len(self.trained) > TRAINED_CACHE_CAPACITY:
            self.trained.popitem(last=False)


@dataclass
class Job:
    id: str
    kind: str  # "steerable-train" | "chemical-apply"
    session_id: str
    status: str = "queued"  # queued -> running -> done | failed
    progress: float = 0.0
    result: dict | None = None
    error: dict | None = None

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "session_id": self.session_id,
            "status": self.status,
            "progress": self.progress,
            "result": self.result,
            "error": self.error,
        }


class ServiceState:
    def __init__(self, data_dir: str | None, max_dim: int, workers: int):
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, Job] = {}
        self.registry_lock = threading.Lock()
        self.families = FamilyStore(data_dir) if data_dir else None
        self.max_dim = max_dim
        self.executor = ThreadPoolExecutor(max_workers=workers)

    def session(self, session_id: str) -> Session:
        found = self.sessions.get(session_id)
        if found is None:
            raise ApiError(404, "session-not-found", f"unknown session {session_id!r}")
        return found

    def job(self, job_id: str) -> Job:
        found = self.jobs.get(job_id)
        if found is None:
            raise ApiError(404, "job-not-found", f"unknown job {job_id!r}")
        return found

    def family_store(self) -> FamilyStore:
        if self.families is None or len(self.families) == 0:
            raise ApiError(
                409,
                "family-store-empty",
                "no precomputed circuit families available",
                detail="populate the data directory (see `qbrush precompute`) "
                "and set QBRUSH_DATA_DIR",
            )
        return self.families

    def submit(self, job: Job, fn, *args) -> None:
        with self.registry_lock:
            self.jobs[job.id] = job
        self.executor.submit(self._run_job, job, fn, *args)

    @staticmethod
    def _run_job(job: Job, fn, *args) -> None:
        job.status = "running"
        try:
            job.result = fn(job, *args)
            job.progress = 1.0
            job.status = "done"
        except Exception as err:  # terminal state carries the diagnostic
            job.error = {"code": type(err).__name__, "message": str(err)}
            job.status = "failed"


def _new_id() -> str:
    return secrets.token_hex(8)


def _decode_png_body(body: bytes, max_dim: int) -> CanvasImage:
    if not body.startswith(PNG_SIGNATURE):
        raise ApiError(415, "not-png", "request body is not a PNG image")
    try:
        canvas = CanvasImage.from_png(body)
    except Exception as err:
        raise ApiError(415, "not-png", f"could not decode PNG: {err}") from err
    if canvas.width > max_dim or canvas.height > max_dim:
        raise ApiError(
            413,
            "image-too-large",
            f"image is {canvas.width}x{canvas.height}; limit is {max_dim} per side",
        )
    return canvas


def _png_response(canvas: CanvasImage) -> Response:
    return Response(content=canvas.to_png(), media_type="image/png")


def _parse_train_config(doc: dict) -> ctl.TrainConfig:
    seed = doc.get("seed", 0)
    max_iters = doc.get("max_iters", ctl.TrainConfig.max_iters)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaError("seed", "expected an integer")
    if not isinstance(max_iters, int) or isinstance(max_iters, bool) or max_iters < 0:
        raise SchemaError("max_iters", "expected a non-negative integer")
    return ctl.TrainConfig(max_iters=max_iters, seed=seed)


def create_app(
    data_dir: str | None = None,
    max_dim: int | None = None,
    workers: int | None = None,
) -> FastAPI:
    data_dir = data_dir if data_dir is not None else os.environ.get("QBRUSH_DATA_DIR")
    max_dim = max_dim if max_dim is not None else int(os.environ.get("QBRUSH_MAX_DIM", DEFAULT_MAX_DIM))
    workers = workers or os.cpu_count() or 4
    state = ServiceState(data_dir, max_dim, workers)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        state.executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="qbrush", lifespan=lifespan)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, err: ApiError):
        return JSONResponse(
            status_code=err.status,
            content={"code": err.code, "message": err.message, "detail": err.detail},
        )

    def _schema_guard(fn):
        """Translate shared-schema and region failures into 422 responses."""
        try:
            return fn()
        except SchemaError as err:
            raise ApiError(422, "invalid-schema", str(err), detail={"field": err.field}) from err
        except (RegionError, RegionTooSmallError, DegenerateRegionError) as err:
            raise ApiError(422, "invalid-region", str(err)) from err

    # -- sessions ----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        canvas = _decode_png_body(body, state.max_dim)
        session = Session(_new_id(), canvas)
        state.sessions[session.id] = session
        return {"session_id": session.id}

    @app.get("/sessions/{session_id}/canvas")
    def get_canvas(session_id: str):
        session = state.session(session_id)
        with session.lock:
            return _png_response(session.canvas)

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = state.session(session_id)
        with session.lock:
            if not session.undo_stack:
                raise ApiError(409, "nothing-to-undo", "undo stack is empty")
            session.canvas = session.undo_stack.pop()
        return {"ok": True, "remaining": len(session.undo_stack)}

    # -- steerable ---------------------------------------------------------

    def _run_steerable(job: Job, session: Session, doc: dict) -> dict:
        source = parse_region(doc.get("source"))
        target = parse_region(doc.get("target"))
        paste = parse_region(doc["paste"]) if doc.get("paste") is not None else None
        params = parse_steerable_params(doc.get("params", {}))
        config = _parse_train_config(doc.get("params", {}))
        with session.lock:
            base = session.canvas.copy()

        def on_progress(it: int, total: int) -> None:
            job.progress = it / max(total, 1)

        application = prepare_steerable(base, source, target, paste, params, config, on_progress)
        canvas = application.evaluate(params.t)
        train_id = _new_id()
        with session.lock:
            session.undo_stack.append(session.canvas)
            session.canvas = canvas
            session.cache_trained(train_id, application)
        return {
            "train_id": train_id,
            "final_fidelity": application.trained.final_fidelity,
            "t": params.t,
        }

    @app.post("/sessions/{session_id}/effects/steerable")
    def submit_steerable(session_id: str, payload: dict = Body(...)):
        session = state.session(session_id)
        # validate synchronously so schema errors surface as 422, not job failures
        _schema_guard(lambda: parse_region(payload.get("source")))
        _schema_guard(lambda: parse_region(payload.get("target")))
        if payload.get("paste") is not None:
            _schema_guard(lambda: parse_region(payload["paste"]))
        _schema_guard(lambda: parse_steerable_params(payload.get("params", {})))
        _schema_guard(lambda: _parse_train_config(payload.get("params", {})))
        job = Job(_new_id(), "steerable-train", session.id)
        state.submit(job, _run_steerable, session, payload)
        return {"job_id": job.id}

    @app.post("/sessions/{session_id}/effects/steerable/{train_id}/evaluate")
    def evaluate_steerable(session_id: str, train_id: str, payload: dict = Body(...)):
        session = state.session(session_id)
        application = session.trained.get(train_id)
        if application is None:
            raise ApiError(404, "training-not-found", f"unknown training {train_id!r}")
        t = payload.get("t")
        if not isinstance(t, (int, float)) or t < 0:
            raise ApiError(422, "invalid-schema", "field 't': expected a number >= 0",
                           detail={"field": "t"})
        canvas = application.evaluate(float(t))
        with session.lock:
            session.canvas = canvas
        return _png_response(canvas)

    # -- chemical ----------------------------------------------------------

    def _run_chemical(job: Job, session: Session, doc: dict) -> dict:
        params = parse_chemical_params(doc.get("params", {}))
        stroke = parse_stroke(doc.get("stroke"), radius_override=params.radius)
        store = state.family_store()
        job.progress = 0.1
        family = store.load_nearest(params.bond_distance)
        with session.lock:
            base = session.canvas.copy()
        canvas = apply_chemical(base, stroke, params, family)
        with session.lock:
            session.undo_stack.append(session.canvas)
            session.canvas = canvas
        return {"used_distance": family.distance, "requested_distance": params.bond_distance}

    @app.post("/sessions/{session_id}/effects/chemical")
    def submit_chemical(session_id: str, payload: dict = Body(...)):
        session = state.session(session_id)
        params = _schema_guard(lambda: parse_chemical_params(payload.get("params", {})))
        _schema_guard(lambda: parse_stroke(payload.get("stroke"), radius_override=params.radius))
        state.family_store()  # 409 before queueing when empty
        job = Job(_new_id(), "chemical-apply", session.id)
        state.submit(job, _run_chemical, session, payload)
        return {"job_id": job.id}

    # -- jobs and families ---------------------------------------------------

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return state.job(job_id).as_dict()

    @app.get("/families/index")
    def families_index():
        store = state.family_store()
        return {"distances": [float(d) for d in store.distances]}

    @app.get("/families")
    def family_metadata(distance: float):
        store = state.family_store()
        family = store.load_nearest(distance)
        return {
            "distance": family.distance,
            "requested_distance": distance,
            "m": family.size,
            "first_energy": family.energies[0],
            "final_energy": family.energies[-1],
            "hf_energy": family.hf_energy,
            "exact_e0": family.exact_e0,
            "n_qubits": family.n_qubits,
            "ansatz": family.ansatz,
            "mapping": family.mapping,
        }

    return app


def main() -> None:
    """Run the service with uvicorn (honors QBRUSH_* environment variables)."""
    import uvicorn

    port = int(os.environ.get("QBRUSH_PORT", DEFAULT_PORT))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
