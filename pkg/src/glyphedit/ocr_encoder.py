"""Feature extraction for glyph images.

One abstract interface provides multi-scale backbone features plus a
pooled 720-dim neck vector per image. The default implementation is a
small frozen convolutional stub with fixed-seed initialization, so every
downstream test is self-contained; a real pretrained recognizer can be
plugged in through the same interface (contracts are on shapes, not
values).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .errors import BadShapeError
from .glyph_render import GLOBAL_H, GLOBAL_W, LOCAL_H, LOCAL_W

D_NECK = 720
STUB_CHANNELS = (16, 32, 64, 128, 256)


@dataclass
class MultiScaleFeatures:
    """Exactly five feature maps with non-increasing spatial dims."""

    levels: list[torch.Tensor]  # each (C_i, H_i, W_i)

    def __post_init__(self):
        if len(self.levels) != 5:
            raise BadShapeError(f"expected 5 levels, got {len(self.levels)}")

    @property
    def channels(self) -> tuple[int, ...]:
        return tuple(lv.shape[0] for lv in self.levels)


@dataclass
class OcrFeatures:
    backbone: MultiScaleFeatures
    neck: torch.Tensor  # (720,)


class OcrEncoder:
    """Interface: encode a glyph image to backbone + neck features."""

    channels: tuple[int, ...]
    d_neck: int = D_NECK

    def encode(self, image: np.ndarray | torch.Tensor) -> OcrFeatures:
        raise NotImplementedError

    def encode_batch(self, images) -> list[OcrFeatures]:
        raise NotImplementedError


def expected_level_dims(h: int, w: int) -> list[tuple[int, int]]:
    """Spatial dims of the stub's five levels: full res, then stride-2."""
    dims = [(h, w)]
    for _ in range(4):
        h, w = (h + 1) // 2, (w + 1) // 2
        dims.append((h, w))
    return dims


class StubOcrEncoder(OcrEncoder):
    """Frozen 5-stage convolutional stub.

    Stage 1 keeps resolution; stages 2..5 halve it. The neck averages a
    width-wise sequence read off the last level and projects it to 720.
    """

    channels = STUB_CHANNELS

    def __init__(self, seed: int = 0):
        self.seed = seed
        gen = torch.Generator().manual_seed(seed)
        stages = []
        in_c = 1
        for i, out_c in enumerate(STUB_CHANNELS):
            stride = 1 if i == 0 else 2
            conv = nn.Conv2d(in_c, out_c, 3, stride=stride, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.2)
                conv.bias.copy_(torch.randn(conv.bias.shape, generator=gen) * 0.05)
            stages.append(conv)
            in_c = out_c
        self._stages = nn.ModuleList(stages)
        self._neck_proj = nn.Linear(STUB_CHANNELS[-1], D_NECK)
        with torch.no_grad():
            self._neck_proj.weight.copy_(
                torch.randn(self._neck_proj.weight.shape, generator=gen) * 0.05
            )
            self._neck_proj.bias.zero_()
        for p in self.parameters():
            p.requires_grad_(False)

    def parameters(self):
        yield from self._stages.parameters()
        yield from self._neck_proj.parameters()

    def weight_checksum(self) -> str:
        h = hashlib.sha256()
        for p in self.parameters():
            h.update(p.detach().numpy().tobytes())
        return h.hexdigest()

    def _check_shape(self, image: torch.Tensor) -> None:
        if tuple(image.shape) not in {(LOCAL_H, LOCAL_W), (GLOBAL_H, GLOBAL_W)}:
            raise BadShapeError(
                f"expected {LOCAL_H}x{LOCAL_W} or {GLOBAL_H}x{GLOBAL_W} image, "
                f"got {tuple(image.shape)}"
            )

    def _forward(self, x: torch.Tensor) -> tuple[list[torch.Tensor], torch.Tensor]:
        # x: (B, 1, H, W)
        levels = []
        for conv in self._stages:
            x = torch.tanh(conv(x))
            levels.append(x)
        # sequence over width positions of the last level
        seq = levels[-1].mean(dim=2).transpose(1, 2)  # (B, W5, C5)
        neck = self._neck_proj(seq).mean(dim=1)  # (B, 720)
        return levels, neck

    @torch.no_grad()
    def encode(self, image) -> OcrFeatures:
        t = torch.as_tensor(np.asarray(image), dtype=torch.float32)
        self._check_shape(t)
        levels, neck = self._forward(t[None, None])
        return OcrFeatures(
            backbone=MultiScaleFeatures([lv[0] for lv in levels]), neck=neck[0]
        )

    @torch.no_grad()
    def encode_batch(self, images) -> list[OcrFeatures]:
        # one image at a time: batched and looped convolutions take
        # different gemm paths on CPU, and the batch/loop equivalence
        # contract is tighter than that numerical gap
        return [self.encode(im) for im in images]
