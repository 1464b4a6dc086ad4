"""Shared edit entry point used by both the CLI and the HTTP service,
so the two surfaces produce identical outputs for identical inputs."""

from __future__ import annotations

import time

import numpy as np
import torch
from PIL import Image

from .data import CANVAS, TextRegionSample
from .diffusion import SamplerConfig
from .errors import BadInputError, EmptyTextError, GlyphEditError, TextTooLongError
from .geometry import Polygon, letterbox, polygon_to_mask, unletterbox
from .glyph_render import N_MAX, TextLine
from .latent_guidance import extract_style_crop
from .model import EditorModel


def parse_text(text: str) -> TextLine:
    try:
        return TextLine(text)
    except TextTooLongError as e:
        raise BadInputError(f"{e} (limit: {N_MAX} characters)") from e
    except EmptyTextError as e:
        raise BadInputError(str(e)) from e


def mask_to_polygon(mask: torch.Tensor) -> Polygon:
    """Bounding-box polygon of a binary (1, H, W) mask."""
    ys, xs = torch.nonzero(mask[0] > 0.5, as_tuple=True)
    if len(ys) == 0:
        raise BadInputError("mask is empty")
    x0, x1 = float(xs.min()), float(xs.max()) + 1
    y0, y1 = float(ys.min()), float(ys.max()) + 1
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def edit_image(
    model: EditorModel,
    image: torch.Tensor,
    text: str,
    polygon: Polygon | None = None,
    mask: torch.Tensor | None = None,
    sampler: SamplerConfig | None = None,
) -> tuple[torch.Tensor, dict]:
    """Replace the region's text; returns (edited image, stage timings).

    `image` is (3, H, W) in [-1, 1]; exactly one of polygon/mask must be
    given. Pixels outside the region are returned bit-identical to the
    input, and the output has the input's dimensions.
    """
    if (polygon is None) == (mask is None):
        raise BadInputError("provide exactly one of polygon or mask")
    line = parse_text(text)
    _, h, w = image.shape

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if polygon is None:
        if mask.shape[-2:] != (h, w):
            raise BadInputError("mask dimensions must match the image")
        polygon = mask_to_polygon(mask)
        orig_mask = (mask > 0.5).float()
    else:
        if len(polygon) < 3:
            raise BadInputError("polygon needs at least 3 points")
        for x, y in polygon:
            if not (0 <= x <= w and 0 <= y <= h):
                raise BadInputError(f"polygon point ({x}, {y}) outside the image")
        orig_mask = polygon_to_mask(polygon, h, w)

    canvas, canvas_poly = letterbox(image, polygon, CANVAS)
    canvas_mask = polygon_to_mask(canvas_poly, CANVAS, CANVAS)
    sample = TextRegionSample(
        image=canvas,
        polygon=canvas_poly,
        text=line,
        mask=canvas_mask,
        style_crop=extract_style_crop(canvas, canvas_poly),
    )
    timings["prepare_ms"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    edited_canvas = model.ddim_sample(sample, line, sampler)
    timings["sample_ms"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    edited = unletterbox(edited_canvas, h, w)
    out = torch.where(orig_mask.bool().expand_as(image), edited, image)
    timings["composite_ms"] = (time.perf_counter() - t0) * 1000
    return out, timings


def image_to_png_array(image: torch.Tensor) -> np.ndarray:
    """(3, H, W) in [-1, 1] -> HxWx3 uint8."""
    arr = ((image.clamp(-1, 1) + 1) * 127.5).round().to(torch.uint8)
    return arr.permute(1, 2, 0).numpy()


def save_png(image: torch.Tensor, path: str) -> None:
    Image.fromarray(image_to_png_array(image)).save(path)


def load_mask_png(path: str) -> torch.Tensor:
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr)[None]
