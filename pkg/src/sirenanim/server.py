"""Live frame service: poses in over WebSocket, raw RGBA frames out.

Protocol:

* client sends text JSON {"type": "pose", "id": <u32>, "values": [45 floats]};
  values are clamped to [-1, 1] on receipt;
* server replies with a binary frame: u32 frame-id, u16 width, u16 height
  (little-endian), then width*height*4 RGBA8 bytes, rows top to bottom;
* a latest-wins mailbox drops intermediate poses when the client sends
  faster than the renderer draws, so replies are a monotone subsequence of
  the received pose ids;
* malformed JSON closes the socket with code 1003; a wrong pose arity gets
  a text error message and the connection stays open.

GET /info reports bundle metadata and the recent frame rate; GET / serves
the static UI when a directory of assets is configured.
"""

from __future__ import annotations

import asyncio
import json
import struct
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .distiller import POSE_DIMS

__all__ = ["create_app", "encode_frame", "default_ui_dir"]

_CLOSE_UNSUPPORTED = 1003


def encode_frame(frame_id: int, rgba8: np.ndarray) -> bytes:
    """Binary frame message: u32 id, u16 w, u16 h, then RGBA8 rows."""
    h, w, c = rgba8.shape
    assert c == 4
    return struct.pack("<IHH", frame_id & 0xFFFFFFFF, w, h) + rgba8.tobytes()


def default_ui_dir() -> Path | None:
    """Built frontend assets, when the sibling frontend/dist exists."""
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


class _PoseMailbox:
    """Single-slot, latest-wins buffer between the reader and the renderer."""

    def __init__(self):
        self._slot = None
        self._event = asyncio.Event()

    def put(self, item):
        self._slot = item
        self._event.set()

    async def take(self):
        await self._event.wait()
        self._event.clear()
        item = self._slot
        self._slot = None
        return item


class _FpsMeter:
    def __init__(self, halflife_frames: float = 10.0):
        self._decay = 0.5 ** (1.0 / halflife_frames)
        self._rate = 0.0
        self._last: float | None = None

    def tick(self):
        now = time.perf_counter()
        if self._last is not None:
            dt = max(now - self._last, 1e-6)
            self._rate = self._decay * self._rate + (1.0 - self._decay) * (1.0 / dt)
        self._last = now

    @property
    def fps(self) -> float:
        return self._rate


def create_app(renderer, ui_dir: Path | None = None) -> FastAPI:
    """Wire one renderer into the HTTP + WebSocket application."""
    app = FastAPI(title="sirenanim avatar service")
    app.state.renderer = renderer
    fps = _FpsMeter()
    # one render loop per loaded bundle: a lock serializes model access
    render_lock = asyncio.Lock()

    if ui_dir is None:
        ui_dir = default_ui_dir()
    elif not Path(ui_dir).is_dir():
        ui_dir = None

    @app.get("/info")
    async def info():
        bundle = renderer.bundle
        h, w = bundle.frame_size
        crop = bundle.crop
        return JSONResponse({
            "resolution": h,
            "width": w,
            "height": h,
            "pose_dims": POSE_DIMS,
            "fps": round(fps.fps, 2),
            "bundle": {
                "crop": [crop.x, crop.y, crop.width, crop.height],
                "face_params": bundle.face.param_count(),
                "body_params": bundle.body.param_count(),
                "rest_sha256": bundle.rest_hash,
            },
        })

    if ui_dir is not None:
        @app.get("/")
        async def index():
            return FileResponse(ui_dir / "index.html")

        app.mount("/assets", StaticFiles(directory=ui_dir), name="assets")
    else:
        @app.get("/")
        async def index_placeholder():
            return JSONResponse({
                "service": "sirenanim",
                "hint": "no UI assets built; connect to /ws directly",
            })

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        mailbox = _PoseMailbox()
        loop = asyncio.get_running_loop()

        async def writer():
            while True:
                frame_id, pose = await mailbox.take()
                async with render_lock:
                    rgba = await loop.run_in_executor(None, renderer.render_rgba8, pose)
                fps.tick()
                await ws.send_bytes(encode_frame(frame_id, rgba))

        writer_task = asyncio.create_task(writer())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    await ws.close(code=_CLOSE_UNSUPPORTED)
                    return
                if not isinstance(msg, dict) or msg.get("type") != "pose":
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": "expected a pose message"}
                    ))
                    continue
                values = msg.get("values")
                frame_id = msg.get("id", 0)
                if (not isinstance(values, list) or len(values) != POSE_DIMS
                        or not all(isinstance(v, (int, float)) for v in values)):
                    await ws.send_text(json.dumps({
                        "type": "error",
                        "message": f"pose must hold exactly {POSE_DIMS} numbers",
                    }))
                    continue
                pose = np.clip(np.asarray(values, dtype=np.float64), -1.0, 1.0)
                if not np.all(np.isfinite(pose)):
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": "pose values must be finite"}
                    ))
                    continue
                mailbox.put((int(frame_id), pose))
        except WebSocketDisconnect:
            pass
        finally:
            writer_task.cancel()

    return app
