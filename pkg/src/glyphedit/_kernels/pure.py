"""Pure Python implementations of the hot kernels.

These are the reference implementations; the compiled extension in
``_native.pyx`` must match them exactly (integer arithmetic for edit
distance, identical scanline rule for polygon fill).
"""

from __future__ import annotations

import math

import numpy as np


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, ca in enumerate(a, start=1):
        cur[0] = i
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[len(b)]


def polygon_fill(xs, ys, h: int, w: int) -> np.ndarray:
    """Even-odd scanline rasterization sampled at pixel centers.

    A pixel (i, j) is inside when the point (j + 0.5, i + 0.5) is inside
    the polygon. Returns a uint8 array of shape (h, w).
    """
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    n = len(xs)
    mask = np.zeros((h, w), dtype=np.uint8)
    for i in range(h):
        yc = i + 0.5
        crossings = []
        for k in range(n):
            x1, y1 = xs[k], ys[k]
            x2, y2 = xs[(k + 1) % n], ys[(k + 1) % n]
            if y1 == y2:
                continue
            # half-open rule: each edge owns its lower-y endpoint
            if min(y1, y2) <= yc < max(y1, y2):
                crossings.append(x1 + (yc - y1) * (x2 - x1) / (y2 - y1))
        crossings.sort()
        for k in range(0, len(crossings) - 1, 2):
            a, b = crossings[k], crossings[k + 1]
            j0 = max(0, math.ceil(a - 0.5))
            j1 = min(w, math.ceil(b - 0.5))
            if j1 > j0:
                mask[i, j0:j1] = 1
    return mask
