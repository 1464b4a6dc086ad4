"""HTTP inference service consumed by the editor UI.

JSON over HTTP with base64-encoded PNGs. One request is processed
against the model at a time; at most 8 requests may wait, further ones
are rejected with 429. Endpoints live under /api/v1/.
"""

from __future__ import annotations

import base64
import io
import threading

import numpy as np
import torch
from fastapi import FastAPI, HTTPException
from PIL import Image
from pydantic import BaseModel, Field, model_validator

from . import __version__
from .diffusion import SamplerConfig
from .editing import edit_image, image_to_png_array
from .errors import BadInputError
from .model import EditorModel

MAX_PENDING = 8


class EditRequest(BaseModel):
    image: str = Field(description="base64 PNG")
    polygon: list[list[float]] | None = None
    mask: str | None = Field(default=None, description="base64 PNG, white = edit region")
    text: str
    cfg_scale: float = Field(default=3.0, ge=0, le=15)
    steps: int = Field(default=20, ge=1, le=200)
    seed: int = 0

    @model_validator(mode="after")
    def _exactly_one_region(self):
        if (self.polygon is None) == (self.mask is None):
            raise ValueError("provide exactly one of 'polygon' and 'mask'")
        if self.polygon is not None and len(self.polygon) < 3:
            raise ValueError("'polygon' needs at least 3 points")
        return self


class EditResult(BaseModel):
    image: str
    timings: dict[str, float]
    seed: int
    warnings: list[str] = []


def _decode_png(b64: str, field: str) -> torch.Tensor:
    try:
        raw = base64.b64decode(b64, validate=True)
        img = Image.open(io.BytesIO(raw))
    except Exception as e:
        raise HTTPException(422, detail={"field": field, "error": f"not a valid base64 PNG: {e}"}) from e
    arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return torch.from_numpy(arr).permute(2, 0, 1) / 127.5 - 1.0


def _encode_png(image: torch.Tensor) -> str:
    buf = io.BytesIO()
    Image.fromarray(image_to_png_array(image)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def sanitized_config(model: EditorModel) -> dict:
    cfg = model.run_config.to_dict()
    cfg.pop("checkpoint", None)
    cfg.get("data", {}).pop("manifest", None)
    cfg.get("conditioning", {}).pop("font_path", None)
    return cfg


def create_app(model: EditorModel | None = None) -> FastAPI:
    """Build the service; `model` may be attached later via app.state."""
    app = FastAPI(title="glyphedit", version=__version__)
    app.state.model = model
    app.state.model_lock = threading.Lock()
    app.state.pending = 0
    app.state.pending_lock = threading.Lock()

    @app.get("/api/v1/health")
    def health():
        return {"version": __version__, "model_loaded": app.state.model is not None}

    @app.get("/api/v1/config")
    def config():
        if app.state.model is None:
            raise HTTPException(503, detail="model not loaded")
        return sanitized_config(app.state.model)

    @app.post("/api/v1/edit", response_model=EditResult)
    def edit(req: EditRequest):
        if app.state.model is None:
            raise HTTPException(503, detail="model not loaded")
        with app.state.pending_lock:
            if app.state.pending >= MAX_PENDING:
                raise HTTPException(429, detail="queue full, try again later")
            app.state.pending += 1
        try:
            image = _decode_png(req.image, "image")
            mask = None
            polygon = None
            if req.mask is not None:
                mask = (_decode_png(req.mask, "mask").mean(dim=0, keepdim=True) > 0).float()
            else:
                polygon = [(float(p[0]), float(p[1])) for p in req.polygon]
            sampler = SamplerConfig(steps=req.steps, cfg_scale=req.cfg_scale, seed=req.seed)
            with app.state.model_lock:
                try:
                    out, timings = edit_image(
                        app.state.model, image, req.text, polygon=polygon, mask=mask, sampler=sampler
                    )
                except BadInputError as e:
                    raise HTTPException(422, detail={"field": "text/polygon/mask", "error": str(e)}) from e
            return EditResult(image=_encode_png(out), timings=timings, seed=req.seed, warnings=[])
        finally:
            with app.state.pending_lock:
                app.state.pending -= 1

    return app
