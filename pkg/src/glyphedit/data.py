"""Dataset ingestion: manifests of annotated images, sample extraction.

A manifest is one JSON object per line:

    {"image": "relative/path.png",
     "regions": [{"text": "...", "polygon": [[x, y], ...]}, ...]}

Each training sample is one uniformly chosen (text, polygon) pair from a
record, letterboxed to the 512 x 512 canvas together with its mask and
style crop.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np
import torch
from PIL import Image

from .errors import MissingFileError, SchemaError
from .geometry import Polygon, letterbox, polygon_to_mask, shoelace_area
from .glyph_render import TextLine
from .latent_guidance import StyleCrop, extract_style_crop

log = logging.getLogger(__name__)

CANVAS = 512


def _segments_properly_intersect(a, b, c, d) -> bool:
    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    d1, d2 = cross(c, d, a), cross(c, d, b)
    d3, d4 = cross(a, b, c), cross(a, b, d)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def is_simple_polygon(polygon: Polygon) -> bool:
    """True when no two non-adjacent edges properly intersect."""
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = polygon[j], polygon[(j + 1) % n]
            if _segments_properly_intersect(a, b, c, d):
                return False
    return True


@dataclass
class Region:
    text: str
    polygon: Polygon


@dataclass
class AnnotatedImage:
    image_path: Path
    regions: list[Region]


@dataclass
class TextRegionSample:
    """One editing instance on the 512 x 512 canvas."""

    image: torch.Tensor  # (3, 512, 512) in [-1, 1]
    polygon: Polygon
    text: TextLine
    mask: torch.Tensor  # (1, 512, 512) binary
    style_crop: StyleCrop


def _validate_record(obj: dict, index: int, base: Path) -> AnnotatedImage:
    def fail(field: str, msg: str):
        raise SchemaError(f"record {index}: field '{field}': {msg}")

    if not isinstance(obj, dict):
        raise SchemaError(f"record {index}: expected a JSON object")
    if "image" not in obj or not isinstance(obj["image"], str):
        fail("image", "missing or not a string")
    regions_raw = obj.get("regions")
    if not isinstance(regions_raw, list) or len(regions_raw) == 0:
        fail("regions", "missing, not a list, or empty")
    regions = []
    for k, r in enumerate(regions_raw):
        if not isinstance(r, dict) or "text" not in r or "polygon" not in r:
            fail(f"regions[{k}]", "needs 'text' and 'polygon'")
        poly = r["polygon"]
        if not isinstance(poly, list) or len(poly) < 3:
            fail(f"regions[{k}].polygon", f"needs >= 3 points, got {len(poly) if isinstance(poly, list) else poly}")
        pts = []
        for p in poly:
            if not (isinstance(p, list) and len(p) == 2):
                fail(f"regions[{k}].polygon", f"bad point {p}")
            pts.append((float(p[0]), float(p[1])))
        if shoelace_area(pts) <= 0:
            fail(f"regions[{k}].polygon", "zero area")
        if not is_simple_polygon(pts):
            fail(f"regions[{k}].polygon", "self-intersecting")
        regions.append(Region(text=str(r["text"]), polygon=pts))
    return AnnotatedImage(image_path=base / obj["image"], regions=regions)


def load_manifest(path: str | Path) -> Iterator[AnnotatedImage]:
    """Lazily stream records; schema violations name the record index."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"manifest not found: {path}")
    base = path.parent

    def gen():
        with path.open() as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise SchemaError(f"record {i}: invalid JSON: {e}") from e
                yield _validate_record(obj, i, base)

    return gen()


def save_manifest(records: list[AnnotatedImage], path: str | Path) -> None:
    path = Path(path)
    base = path.parent
    with path.open("w") as fh:
        for rec in records:
            obj = {
                "image": str(rec.image_path.relative_to(base)),
                "regions": [
                    {"text": r.text, "polygon": [[x, y] for x, y in r.polygon]}
                    for r in rec.regions
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@lru_cache(maxsize=256)
def _load_image_cached(path: str) -> torch.Tensor:
    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float32)
    return torch.from_numpy(arr).permute(2, 0, 1) / 127.5 - 1.0


def load_image(path: Path) -> torch.Tensor:
    """Load an RGB image as (3, H, W) in [-1, 1]; decodes are cached."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"image not found: {path}")
    return _load_image_cached(str(path)).clone()


def sample_pair(record: AnnotatedImage, rng: torch.Generator) -> TextRegionSample:
    """Uniformly choose one region and build the training sample."""
    idx = int(torch.randint(len(record.regions), (1,), generator=rng))
    region = record.regions[idx]
    image = load_image(record.image_path)
    canvas, polygon = letterbox(image, region.polygon, CANVAS)
    mask = polygon_to_mask(polygon, CANVAS, CANVAS)
    return TextRegionSample(
        image=canvas,
        polygon=polygon,
        text=TextLine(region.text),
        mask=mask,
        style_crop=extract_style_crop(canvas, polygon),
    )


def sample_stream(
    manifest_path: str | Path, seed: int = 0
) -> Iterator[TextRegionSample]:
    """Endless deterministic stream of samples; invalid texts are skipped
    with a logged warning instead of aborting training."""
    records = list(load_manifest(manifest_path))
    rng = torch.Generator().manual_seed(seed)
    while True:
        order = torch.randperm(len(records), generator=rng).tolist()
        for i in order:
            try:
                yield sample_pair(records[i], rng)
            except Exception as e:  # noqa: BLE001 - skip-and-continue by design
                log.warning("skipping record %d: %s", i, e)
