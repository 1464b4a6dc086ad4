"""Deterministic synthetic dataset generator for tests and demos.

Creates small images with rendered text regions plus the matching
manifest, so training and evaluation can run without any external data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .glyph_render import FontSpec

LATIN_WORDS = [
    "OPEN", "sale", "Cafe", "exit", "Stop", "menu", "Hotel", "park",
    "Tickets", "Books", "fresh", "Milk", "Route 9", "No 42",
]
CJK_WORDS = ["你好", "世界", "文字", "编辑", "测试", "风格", "中文", "图像", "生成", "样式"]


def _random_bg(rng: np.random.RandomState, size: int) -> Image.Image:
    c0 = rng.randint(30, 225, size=3)
    c1 = rng.randint(30, 225, size=3)
    ramp = np.linspace(0, 1, size)[:, None]
    grad = (c0[None, None, :] * (1 - ramp[:, :, None]) + c1[None, None, :] * ramp[:, :, None])
    img = np.broadcast_to(grad, (size, size, 3)).astype(np.uint8)
    return Image.fromarray(np.ascontiguousarray(img))


def make_toy_fixture(
    out_dir: str | Path, n_images: int = 64, seed: int = 0, size: int = 256
) -> dict:
    """Write images + manifest.jsonl + counts.json; returns the counts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.RandomState(seed)
    font = FontSpec()
    words = LATIN_WORDS + CJK_WORDS

    total_regions = 0
    records = []
    for i in range(n_images):
        img = _random_bg(rng, size)
        draw = ImageDraw.Draw(img)
        n_regions = int(rng.randint(1, 4))
        regions = []
        for k in range(n_regions):
            text = words[rng.randint(len(words))]
            px_size = int(rng.randint(18, 34))
            f = font.at_size(px_size)
            x0, y0, x1, y1 = f.getbbox(text)
            tw, th = x1 - x0, y1 - y0
            ox = int(rng.randint(4, max(5, size - tw - 4)))
            oy = int(rng.randint(4 + k * size // 3, min(size - th - 4, 4 + (k + 1) * size // 3)))
            color = tuple(int(v) for v in rng.randint(0, 255, size=3))
            draw.text((ox - x0, oy - y0), text, font=f, fill=color)
            pad = 3
            poly = [
                [ox - pad, oy - pad],
                [ox + tw + pad, oy - pad],
                [ox + tw + pad, oy + th + pad],
                [ox - pad, oy + th + pad],
            ]
            regions.append({"text": text, "polygon": poly})
            total_regions += 1
        name = f"img_{i:03d}.png"
        img.save(out / name)
        records.append({"image": name, "regions": regions})

    with (out / "manifest.jsonl").open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    counts = {"n_images": n_images, "total_regions": total_regions, "seed": seed}
    (out / "counts.json").write_text(json.dumps(counts))
    return counts
