"""Polygon and image geometry shared by the data pipeline and guidance.

All polygons are lists of (x, y) pixel coordinates; masks are rasterized
with an even-odd scanline rule sampled at pixel centers (see _kernels).
"""

from __future__ import annotations

import numpy as np
import torch
from torch.nn import functional as F

from . import _kernels
from .errors import DegeneratePolygonError

Polygon = list[tuple[float, float]]


def shoelace_area(polygon: Polygon) -> float:
    """Absolute polygon area via the shoelace formula."""
    xs = np.array([p[0] for p in polygon], dtype=np.float64)
    ys = np.array([p[1] for p in polygon], dtype=np.float64)
    return float(abs(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1))) / 2)


def polygon_to_mask(polygon: Polygon, h: int, w: int) -> torch.Tensor:
    """Binary rasterization of the polygon, shape (1, h, w), inside = 1."""
    if len(polygon) < 3:
        raise DegeneratePolygonError(f"polygon needs >= 3 points, got {len(polygon)}")
    if shoelace_area(polygon) <= 0.0:
        raise DegeneratePolygonError("polygon has zero area")
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    mask = _kernels.polygon_fill(xs, ys, h, w)
    return torch.from_numpy(np.ascontiguousarray(mask)).float()[None]


def polygon_bbox(polygon: Polygon) -> tuple[int, int, int, int]:
    """Integer axis-aligned bounding box (x0, y0, x1, y1), end-exclusive."""
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    x0, x1 = int(np.floor(min(xs))), int(np.ceil(max(xs)))
    y0, y1 = int(np.floor(min(ys))), int(np.ceil(max(ys)))
    return x0, y0, max(x1, x0 + 1), max(y1, y0 + 1)


def crop_bbox(image: torch.Tensor, polygon: Polygon) -> torch.Tensor:
    """Crop the polygon's bounding box from a (C, H, W) image."""
    _, h, w = image.shape
    x0, y0, x1, y1 = polygon_bbox(polygon)
    x0, y0 = max(0, x0), max(0, y0)
    x1, y1 = min(w, x1), min(h, y1)
    if x1 <= x0 or y1 <= y0:
        raise DegeneratePolygonError("polygon bounding box is outside the image")
    return image[:, y0:y1, x0:x1]


def resize_image(image: torch.Tensor, h: int, w: int, mode: str = "bilinear") -> torch.Tensor:
    """Resize a (C, H, W) image tensor."""
    kwargs = {"align_corners": False} if mode == "bilinear" else {}
    return F.interpolate(image[None], size=(h, w), mode=mode, **kwargs)[0]


def interpolate_mask(mask: torch.Tensor, h: int, w: int) -> torch.Tensor:
    """Nearest-neighbor mask resize; keeps values strictly binary."""
    return F.interpolate(mask[None], size=(h, w), mode="nearest")[0]


def letterbox(
    image: torch.Tensor, polygon: Polygon, size: int = 512, fill: float = 0.0
) -> tuple[torch.Tensor, Polygon]:
    """Aspect-preserving resize onto a size x size canvas.

    The polygon is transformed with the same scale and offsets so it
    stays aligned with the resized pixels.
    """
    _, h, w = image.shape
    scale = size / max(h, w)
    nh, nw = max(1, round(h * scale)), max(1, round(w * scale))
    resized = resize_image(image, nh, nw)
    canvas = torch.full((image.shape[0], size, size), fill, dtype=image.dtype)
    oy, ox = (size - nh) // 2, (size - nw) // 2
    canvas[:, oy : oy + nh, ox : ox + nw] = resized
    # use the achieved scale per axis so polygon and pixels move together
    sx, sy = nw / w, nh / h
    moved = [(x * sx + ox, y * sy + oy) for x, y in polygon]
    return canvas, moved


def unletterbox(canvas: torch.Tensor, orig_h: int, orig_w: int) -> torch.Tensor:
    """Invert letterbox(): crop the content region and resize back."""
    _, size, _ = canvas.shape
    scale = size / max(orig_h, orig_w)
    nh, nw = max(1, round(orig_h * scale)), max(1, round(orig_w * scale))
    oy, ox = (size - nh) // 2, (size - nw) // 2
    content = canvas[:, oy : oy + nh, ox : ox + nw]
    return resize_image(content, orig_h, orig_w)
