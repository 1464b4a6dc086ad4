"""Benchmark the compiled kernels against the pure Python fallbacks.

Run from the repo root:

    python3 benchmarks/bench_kernels.py

Both backends are imported directly so the comparison does not depend on
the GLYPHEDIT_PURE environment variable.
"""

from __future__ import annotations

import math
import random
import time

import numpy as np

from glyphedit._kernels import BACKEND, pure

try:
    from glyphedit._kernels import _native as native
except ImportError:
    native = None


def timeit(fn, repeats: int = 5) -> float:
    """Best-of-N wall time in seconds."""
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def random_string(rng: random.Random, n: int) -> str:
    alphabet = "abcdefghij 你好世界"
    return "".join(rng.choice(alphabet) for _ in range(n))


def random_polygon(rng: random.Random, h: int, w: int, n_vertices: int = 8):
    cx, cy = w / 2, h / 2
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n_vertices))
    xs = [cx + rng.uniform(0.2, 0.45) * w * math.cos(a) for a in angles]
    ys = [cy + rng.uniform(0.2, 0.45) * h * math.sin(a) for a in angles]
    return xs, ys


def bench_levenshtein() -> None:
    rng = random.Random(0)
    pairs = [(random_string(rng, 200), random_string(rng, 200)) for _ in range(50)]

    def run(impl):
        return [impl.levenshtein(a, b) for a, b in pairs]

    assert run(pure) == run(native) if native else True
    t_pure = timeit(lambda: run(pure))
    print(f"levenshtein   50 pairs x 200 chars   pure: {t_pure * 1e3:8.1f} ms", end="")
    if native:
        t_nat = timeit(lambda: run(native))
        print(f"   native: {t_nat * 1e3:8.1f} ms   speedup: {t_pure / t_nat:5.1f}x")
    else:
        print("   (no compiled extension)")


def bench_polygon_fill() -> None:
    rng = random.Random(1)
    polys = [random_polygon(rng, 512, 512) for _ in range(10)]

    def run(impl):
        return [impl.polygon_fill(xs, ys, 512, 512) for xs, ys in polys]

    if native:
        for a, b in zip(run(pure), run(native)):
            assert np.array_equal(a, b)
    t_pure = timeit(lambda: run(pure), repeats=3)
    print(f"polygon_fill  10 polys at 512x512    pure: {t_pure * 1e3:8.1f} ms", end="")
    if native:
        t_nat = timeit(lambda: run(native), repeats=3)
        print(f"   native: {t_nat * 1e3:8.1f} ms   speedup: {t_pure / t_nat:5.1f}x")
    else:
        print("   (no compiled extension)")


if __name__ == "__main__":
    print(f"default backend: {BACKEND}")
    bench_levenshtein()
    bench_polygon_fill()
