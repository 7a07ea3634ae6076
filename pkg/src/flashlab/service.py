"""Read-only HTTP API for the interactive relighting editor.

Serves scene listings, component images (PNG for display, PFM for raw
floats), and server-side relighting from stored decomposition results, so
the browser client never re-implements the formation math.

Layout: a dataset root with manifest.json; per-scene decomposition results
live in <root>/<scene_id>/decomp/. Component requests prefer the
decomposition estimates and fall back to dataset ground truth; P is always
the dataset photograph.
"""

from __future__ import annotations

import json
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import formation, imgcore

COMPONENTS = ("P", "A", "F", "R", "S_A", "S_F")
DECOMP_FILES = ("S_A.pfm", "S_F.pfm", "R.pfm", "A.pfm", "F.pfm", "meta.json")


class RelightRequest(BaseModel):
    scene_id: str
    kappa: float = Field(ge=0)
    alpha: float = Field(ge=0)
    kelvin: float = Field(ge=formation.K_MIN, le=formation.K_MAX)
    output: str = Field(default="png", pattern="^png$")


class SceneStore:
    """Immutable view over a dataset root; per-scene results cached."""

    def __init__(self, root):
        self.root = Path(root)

    def entries(self) -> list[dict]:
        manifest_path = self.root / "manifest.json"
        if not manifest_path.exists():
            return []
        manifest = json.loads(manifest_path.read_text())
        return sorted(manifest["records"], key=lambda e: e["id"])

    def entry(self, scene_id: str) -> dict:
        for e in self.entries():
            if e["id"] == scene_id:
                return e
        raise HTTPException(status_code=404, detail=f"unknown scene {scene_id!r}")

    def decomp_dir(self, scene_id: str) -> Path:
        return self.root / scene_id / "decomp"

    def has_decomposition(self, scene_id: str) -> bool:
        d = self.decomp_dir(scene_id)
        return all((d / f).exists() for f in DECOMP_FILES)

    @lru_cache(maxsize=64)
    def _photo(self, scene_id: str) -> np.ndarray:
        e = self.entry(scene_id)
        return imgcore.read_pfm(self.root / e["paths"]["P"])

    @lru_cache(maxsize=16)
    def decomposition(self, scene_id: str) -> formation.DecompositionResult:
        if not self.has_decomposition(scene_id):
            raise HTTPException(status_code=404,
                                detail=f"scene {scene_id!r} has no decomposition")
        return formation.load_decomposition(self.decomp_dir(scene_id))

    def component(self, scene_id: str, name: str) -> np.ndarray:
        if name not in COMPONENTS:
            raise HTTPException(status_code=404, detail=f"unknown component {name!r}")
        if name == "P":
            return self._photo(scene_id)
        if self.has_decomposition(scene_id):
            return getattr(self.decomposition(scene_id), name)
        e = self.entry(scene_id)
        return imgcore.read_pfm(self.root / e["paths"][name])


def create_app(data_root) -> FastAPI:
    store = SceneStore(data_root)
    app = FastAPI(title="flashlab relighting service")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors())})

    @app.get("/api/scenes")
    def list_scenes():
        try:
            entries = store.entries()
        except (OSError, ValueError, KeyError) as e:
            raise HTTPException(status_code=500, detail=f"unreadable dataset root: {e}")
        out = []
        for e in entries:
            photo = store._photo(e["id"])
            has_decomp = store.has_decomposition(e["id"])
            kelvin = e["kelvin"]
            if has_decomp:
                # the editor's identity edit needs the decomposed temperature,
                # which can differ from the dataset's when a network produced it
                meta = json.loads((store.decomp_dir(e["id"]) / "meta.json").read_text())
                kelvin = meta["kelvin"]
            out.append({
                "id": e["id"], "width": photo.shape[1], "height": photo.shape[0],
                "kelvin": kelvin, "has_decomposition": has_decomp,
            })
        return out

    @app.get("/api/scenes/{scene_id}/component/{name}")
    def get_component(scene_id: str, name: str, request: Request, format: str = "png"):
        img = store.component(scene_id, name)
        wants_pfm = format == "pfm" or "application/x-pfm" in request.headers.get("accept", "")
        if wants_pfm:
            return Response(content=imgcore.pfm_bytes(img), media_type="application/x-pfm")
        return Response(content=imgcore.png_bytes(imgcore.srgb_encode(img)),
                        media_type="image/png")

    @app.post("/api/relight")
    def relight(req: RelightRequest):
        t0 = time.perf_counter()
        d = store.decomposition(req.scene_id)
        out = formation.relight(d, req.kappa, req.alpha, req.kelvin)
        body = imgcore.png_bytes(imgcore.srgb_encode(out))
        ms = (time.perf_counter() - t0) * 1000.0
        return Response(content=body, media_type="image/png",
                        headers={"X-Compute-Ms": f"{ms:.2f}"})

    return app


def serve(data_root, bind: str = "127.0.0.1", port: int = 8787, ui_dir=None):
    """Run the service under uvicorn; optionally mount a static UI bundle."""
    import uvicorn

    app = create_app(data_root)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host=bind, port=port, log_level="warning")
