"""Test-side oracles kept independent of the library code paths."""

from __future__ import annotations

from functools import lru_cache

import torch


def edit_distance_oracle(a: str, b: str) -> int:
    """Recursive-with-memo edit distance, independent of the DP kernel."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        sub = go(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1)
        return min(go(i - 1, j) + 1, go(i, j - 1) + 1, sub)

    return go(len(a), len(b))


def fd_gradcheck(
    params: list[torch.nn.Parameter],
    loss_fn,
    n_samples: int = 64,
    eps: float = 1e-4,
    rtol: float = 1e-3,
    seed: int = 0,
) -> float:
    """Central finite differences vs autograd on sampled parameters.

    All modules involved must already be in float64. Returns the worst
    relative error; asserts it is below `rtol`.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    gen = torch.Generator().manual_seed(seed)
    flat = [(p, i) for p in params for i in range(min(p.numel(), 10**9))]
    idx = torch.randperm(len(flat), generator=gen)[:n_samples]
    worst = 0.0
    for k in idx.tolist():
        p, i = flat[k]
        with torch.no_grad():
            orig = p.view(-1)[i].item()
            p.view(-1)[i] = orig + eps
            up = loss_fn().item()
            p.view(-1)[i] = orig - eps
            down = loss_fn().item()
            p.view(-1)[i] = orig
        fd = (up - down) / (2 * eps)
        an = p.grad.view(-1)[i].item() if p.grad is not None else 0.0
        # floor the denominator so float roundoff in the two loss
        # evaluations cannot dominate near-zero gradients
        denom = max(abs(fd), abs(an), 1e-6)
        rel = abs(fd - an) / denom
        worst = max(worst, rel)
    assert worst < rtol, f"gradient mismatch: worst relative error {worst:.2e}"
    return worst
