"""HTTP facade for interactive segmentation.

Thin stateful layer over the core pipelines: upload a volume to open a
session, fetch windowed slices as PNG, run either segmentation method, and
fetch mask overlays as run-length encoded rows.  The service adds no
numerical behavior; results are exactly what the library produces for the
same inputs.

Upload bodies:
  application/octet-stream  single-file NIfTI-1 (.nii) bytes
  application/json          {"sidecar": {canonical .vol.json fields},
                             "data_b64": base64 raw payload}

Errors are JSON: {"error", "stage", "detail"}.
"""

from __future__ import annotations

import base64
import io
import json
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .balloon import BalloonParams, OutlineInit, run_balloon
from .mesh import save_off
from .metrics import dsc, load_mask
from .raygraph import RayGraphSpec, run_graph
from .results import SegmentationResult
from .volume import BinaryMask, Volume, load_volume

SESSION_IDLE_SECONDS = 30 * 60

_AXES = {"x": 0, "y": 1, "z": 2}


class ServiceError(Exception):
    def __init__(self, status: int, stage: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.stage = stage
        self.detail = detail


@dataclass(eq=False)
class Session:
    id: str
    volume: Volume
    created_at: float = field(default_factory=time.time)
    last_access: float = field(default_factory=time.time)
    reference: BinaryMask | None = None
    results: dict[str, SegmentationResult] = field(default_factory=dict)
    run_lock: threading.Lock = field(default_factory=threading.Lock)

    def touch(self):
        self.last_access = time.time()


class SessionStore:
    def __init__(self, idle_seconds: float = SESSION_IDLE_SECONDS):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.RLock()
        self.idle_seconds = idle_seconds

    def create(self, volume: Volume) -> Session:
        session = Session(id=uuid.uuid4().hex, volume=volume)
        with self._lock:
            self._purge()
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            self._purge()
            session = self._sessions.get(session_id)
            if session is None:
                raise ServiceError(404, "session", f"unknown session {session_id}")
            session.touch()
            return session

    def _purge(self):
        now = time.time()
        stale = [k for k, s in self._sessions.items() if now - s.last_access > self.idle_seconds]
        for k in stale:
            del self._sessions[k]


def _parse_volume_upload(content_type: str, body: bytes, loader):
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        if content_type.startswith("application/json"):
            try:
                payload = json.loads(body)
                sidecar = payload["sidecar"]
                raw = base64.b64decode(payload["data_b64"])
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ServiceError(400, "upload", f"malformed JSON upload: {exc}") from exc
            sidecar = dict(sidecar)
            sidecar["data_file"] = "payload.raw"
            (tmp / "upload.vol.json").write_text(json.dumps(sidecar))
            (tmp / "payload.raw").write_bytes(raw)
            target = tmp / "upload.vol.json"
        else:
            target = tmp / "upload.nii"
            target.write_bytes(body)
        try:
            return loader(target)
        except Exception as exc:
            raise ServiceError(400, "upload", f"cannot parse upload: {exc}") from exc


def _slice_2d(array: np.ndarray, axis_name: str, index: int) -> np.ndarray:
    """Extract a slice as [u, v] with (u, v) the remaining axes in x,y,z order."""
    axis = _AXES.get(axis_name)
    if axis is None:
        raise ServiceError(400, "slice", f"axis must be one of x/y/z, got {axis_name!r}")
    if not (0 <= index < array.shape[axis]):
        raise ServiceError(
            400, "slice", f"index {index} out of bounds for axis {axis_name} "
            f"({array.shape[axis]} slices)"
        )
    return np.take(array, index, axis=axis)


def _window_to_u8(slice2d: np.ndarray, wc: float, ww: float) -> np.ndarray:
    if ww <= 0:
        raise ServiceError(400, "slice", "window width must be > 0")
    lo = wc - ww / 2.0
    g = (slice2d.astype(np.float64) - lo) / ww * 255.0
    return np.clip(np.rint(g), 0, 255).astype(np.uint8)


def _rle_rows(slice2d: np.ndarray) -> list[list[int]]:
    """Per image row (second slice axis), [start, length, ...] runs of set pixels."""
    width, height = slice2d.shape
    rows = []
    for v in range(height):
        line = slice2d[:, v]
        runs = []
        start = None
        for u in range(width):
            if line[u] and start is None:
                start = u
            elif not line[u] and start is not None:
                runs += [start, u - start]
                start = None
        if start is not None:
            runs += [start, width - start]
        rows.append(runs)
    return rows


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="tumorseg service")
    sessions = store or SessionStore()
    app.state.sessions = sessions

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": True, "stage": exc.stage, "detail": exc.detail},
        )

    def _session_info(session: Session) -> dict:
        lo, hi = session.volume.intensity_range
        return {
            "session_id": session.id,
            "dims": list(session.volume.dims),
            "spacing_mm": list(session.volume.spacing),
            "intensity_range": [lo, hi],
            "has_reference": session.reference is not None,
            "result_ids": sorted(session.results),
        }

    @app.get("/defaults")
    async def get_defaults():
        from dataclasses import asdict

        return {"balloon": asdict(BalloonParams()), "graph": asdict(RayGraphSpec())}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        volume = _parse_volume_upload(
            request.headers.get("content-type", ""), body, load_volume
        )
        session = sessions.create(volume)
        return _session_info(session)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return _session_info(sessions.get(session_id))

    @app.post("/sessions/{session_id}/reference")
    async def attach_reference(session_id: str, request: Request):
        session = sessions.get(session_id)
        body = await request.body()
        mask = _parse_volume_upload(request.headers.get("content-type", ""), body, load_mask)
        if mask.dims != session.volume.dims:
            raise ServiceError(
                400, "reference",
                f"mask dims {mask.dims} do not match volume dims {session.volume.dims}",
            )
        session.reference = mask
        return {"attached": True, "voxel_count": int(mask.bits.sum())}

    @app.get("/sessions/{session_id}/slice")
    async def get_slice(
        session_id: str,
        axis: str = Query(...),
        index: int = Query(...),
        wc: float | None = Query(None),
        ww: float | None = Query(None),
    ):
        session = sessions.get(session_id)
        lo, hi = session.volume.intensity_range
        if wc is None or ww is None:
            wc = (lo + hi) / 2.0
            ww = max(hi - lo, 1e-9)
        slc = _slice_2d(session.volume.data, axis, index)
        u8 = _window_to_u8(slc, wc, ww)
        image = Image.fromarray(u8.T)  # rows = second slice axis
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/sessions/{session_id}/segment")
    async def segment(session_id: str, request: Request):
        session = sessions.get(session_id)
        try:
            payload = await request.json()
        except Exception as exc:
            raise ServiceError(400, "request", f"body must be JSON: {exc}") from exc
        method = payload.get("method")
        params = payload.get("params", {})
        if method == "balloon":
            if "outline" not in payload:
                raise ServiceError(400, "request", "balloon method requires an 'outline'")
            try:
                outline = OutlineInit.from_json(payload["outline"])
                balloon_params = BalloonParams(**params)
            except (TypeError, ValueError, KeyError) as exc:
                raise ServiceError(400, "request", f"bad balloon request: {exc}") from exc
            with session.run_lock:
                try:
                    result = run_balloon(session.volume, outline, balloon_params)
                except Exception as exc:
                    raise ServiceError(422, "segmentation", str(exc)) from exc
        elif method == "graph":
            if "seed_mm" not in payload:
                raise ServiceError(400, "request", "graph method requires 'seed_mm'")
            try:
                spec = RayGraphSpec(**params)
                seed = [float(c) for c in payload["seed_mm"]]
                if len(seed) != 3:
                    raise ValueError("seed_mm must have three components")
            except (TypeError, ValueError) as exc:
                raise ServiceError(400, "request", f"bad graph request: {exc}") from exc
            with session.run_lock:
                try:
                    result = run_graph(session.volume, seed, spec)
                except Exception as exc:
                    raise ServiceError(422, "segmentation", str(exc)) from exc
        else:
            raise ServiceError(400, "request", f"method must be balloon or graph, got {method!r}")

        result_id = uuid.uuid4().hex[:12]
        session.results[result_id] = result
        response = {"result_id": result_id, **result.to_dict()}
        if session.reference is not None:
            response["dsc"] = dsc(result.mask, session.reference)
        return response

    def _get_result(session: Session, result_id: str) -> SegmentationResult:
        result = session.results.get(result_id)
        if result is None:
            raise ServiceError(404, "result", f"unknown result {result_id}")
        return result

    @app.get("/sessions/{session_id}/results/{result_id}")
    async def get_result(session_id: str, result_id: str):
        session = sessions.get(session_id)
        result = _get_result(session, result_id)
        response = {"result_id": result_id, **result.to_dict()}
        if session.reference is not None:
            response["dsc"] = dsc(result.mask, session.reference)
        return response

    @app.get("/sessions/{session_id}/results/{result_id}/overlay")
    async def get_overlay(
        session_id: str, result_id: str, axis: str = Query(...), index: int = Query(...)
    ):
        session = sessions.get(session_id)
        result = _get_result(session, result_id)
        slc = _slice_2d(result.mask.bits, axis, index)
        return {
            "axis": axis,
            "index": index,
            "width": int(slc.shape[0]),
            "height": int(slc.shape[1]),
            "rows": _rle_rows(slc),
        }

    @app.get("/sessions/{session_id}/results/{result_id}/mesh")
    async def get_mesh(session_id: str, result_id: str):
        session = sessions.get(session_id)
        result = _get_result(session, result_id)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_off(result.mesh, Path(tmp) / "surface.off")
            text = path.read_text()
        return PlainTextResponse(text)

    frontend_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if frontend_dist.is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dist), html=True), name="ui")

    return app


app = create_app()
