"""Build the cross-attention condition from glyph image features.

Per-character (local) and full-line (global) features from the OCR
encoder are combined along two paths: backbone maps go through an
FPN-style fusion module, neck vectors are used directly; each path runs
through its own cross-attention transformer (queries/values from the
local stream, keys from the repeated global row, rotary position
encoding on Q/K), and an aggregator projects the concatenated results to
the final N x 1024 condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn
from torch.nn import functional as F

from .errors import (
    DimMismatchError,
    LevelCountMismatchError,
    NonFiniteError,
    RowCountMismatchError,
    SpatialMismatchError,
)
from .glyph_render import N_MAX, FontSpec, TextLine, render_glyphs
from .ocr_encoder import D_NECK, MultiScaleFeatures, OcrEncoder, StubOcrEncoder


@dataclass
class GlyphTransformerConfig:
    d_local: int
    d_global: int
    d_model: int = 512
    d_output: int = 1024
    layers: int = 4
    heads: int = 2
    rope_base: float = 10000.0

    def __post_init__(self):
        if self.d_model % (2 * self.heads) != 0:
            raise DimMismatchError(
                f"d_model={self.d_model} must be divisible by 2*heads={2 * self.heads}"
            )


@dataclass
class ConditionEmbedding:
    """The condition fed to the denoiser's cross-attention, (N, 1024)."""

    e_final: torch.Tensor

    def __post_init__(self):
        if not torch.isfinite(self.e_final).all():
            raise NonFiniteError("condition embedding contains NaN/Inf")

    @property
    def rows(self) -> int:
        return self.e_final.shape[0]


def rope_rotate(x: torch.Tensor, base: float, positions: torch.Tensor | None = None) -> torch.Tensor:
    """Rotate consecutive dimension pairs by position-dependent angles.

    x: (heads, N, d_head) with even d_head. Position i is rotated by
    angles i * base**(-2k/d_head), so dot products between rotated
    queries and keys depend only on relative offsets.
    """
    heads, n, d = x.shape
    if positions is None:
        positions = torch.arange(n, dtype=x.dtype, device=x.device)
    freqs = base ** (-torch.arange(0, d, 2, dtype=x.dtype, device=x.device) / d)
    angles = positions[:, None] * freqs[None, :]  # (N, d/2)
    cos, sin = torch.cos(angles), torch.sin(angles)
    x1, x2 = x[..., 0::2], x[..., 1::2]
    out = torch.empty_like(x)
    out[..., 0::2] = x1 * cos - x2 * sin
    out[..., 1::2] = x1 * sin + x2 * cos
    return out


class _CrossAttentionLayer(nn.Module):
    """One transformer layer: cross-attention then a residual MLP.

    Queries and values come from the evolving local stream, keys from
    the (projected, repeated) global stream. The layer output is the
    attended features plus the MLP residual; the local input does not
    bypass attention, so without positional encoding every output row
    collapses to the same value average.
    """

    def __init__(self, cfg: GlyphTransformerConfig):
        super().__init__()
        d = cfg.d_model
        self.heads = cfg.heads
        self.d_head = d // cfg.heads
        self.rope_base = cfg.rope_base
        self.norm_local = nn.LayerNorm(d)
        self.norm_global = nn.LayerNorm(d)
        self.w_q = nn.Linear(d, d)
        self.w_k = nn.Linear(d, d)
        self.w_v = nn.Linear(d, d)
        self.out_proj = nn.Linear(d, d)
        self.norm_ff = nn.LayerNorm(d)
        self.ff = nn.Sequential(nn.Linear(d, 4 * d), nn.GELU(), nn.Linear(4 * d, d))

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        n = x.shape[0]
        return x.view(n, self.heads, self.d_head).transpose(0, 1)  # (heads, N, d_head)

    def attention_logits(
        self, local: torch.Tensor, global_rows: torch.Tensor, rope_enabled: bool
    ) -> torch.Tensor:
        """Raw pre-softmax logits, shape (heads, N, N)."""
        q = self._split(self.w_q(self.norm_local(local)))
        k = self._split(self.w_k(self.norm_global(global_rows)))
        if rope_enabled:
            q = rope_rotate(q, self.rope_base)
            k = rope_rotate(k, self.rope_base)
        return q @ k.transpose(-2, -1) / math.sqrt(self.d_head)

    def forward(
        self, local: torch.Tensor, global_rows: torch.Tensor, rope_enabled: bool
    ) -> torch.Tensor:
        logits = self.attention_logits(local, global_rows, rope_enabled)
        v = self._split(self.w_v(self.norm_local(local)))
        attended = torch.softmax(logits, dim=-1) @ v  # (heads, N, d_head)
        n = local.shape[0]
        h = self.out_proj(attended.transpose(0, 1).reshape(n, -1))
        return h + self.ff(self.norm_ff(h))


class GlyphTransformer(nn.Module):
    """Stack of cross-attention layers plus the output projection."""

    def __init__(self, cfg: GlyphTransformerConfig):
        super().__init__()
        self.cfg = cfg
        self.in_local = nn.Linear(cfg.d_local, cfg.d_model)
        self.in_global = nn.Linear(cfg.d_global, cfg.d_model)
        self.layers = nn.ModuleList(
            _CrossAttentionLayer(cfg) for _ in range(cfg.layers)
        )
        self.out_proj = nn.Linear(cfg.d_model, cfg.d_output)

    def forward(
        self, local: torch.Tensor, global_feat: torch.Tensor, rope_enabled: bool = True
    ) -> torch.Tensor:
        if local.ndim != 2 or local.shape[1] != self.cfg.d_local:
            raise DimMismatchError(
                f"local features must be (N, {self.cfg.d_local}), got {tuple(local.shape)}"
            )
        if global_feat.shape != (1, self.cfg.d_global):
            raise DimMismatchError(
                f"global features must be (1, {self.cfg.d_global}), got {tuple(global_feat.shape)}"
            )
        n = local.shape[0]
        if n < 1:
            raise DimMismatchError("need at least one character row")
        x = self.in_local(local)
        g = self.in_global(global_feat).expand(n, -1)
        for layer in self.layers:
            x = layer(x, g, rope_enabled)
            if not torch.isfinite(x).all():
                raise NonFiniteError("non-finite intermediate in glyph transformer")
        return self.out_proj(x)

    def first_layer_logits(
        self, local: torch.Tensor, global_feat: torch.Tensor, rope_enabled: bool = True
    ) -> torch.Tensor:
        n = local.shape[0]
        x = self.in_local(local)
        g = self.in_global(global_feat).expand(n, -1)
        return self.layers[0].attention_logits(x, g, rope_enabled)


class BackboneFusion(nn.Module):
    """FPN-style top-down fusion of five backbone levels to one vector.

    Lateral 1x1 projections to a common dim, top-down nearest-neighbor
    upsample-add with 3x3 smoothing, then 1x1 projection, stride-2
    downsample and adaptive average pooling.
    """

    def __init__(self, in_channels: tuple[int, ...], d_out: int = 512):
        super().__init__()
        if len(in_channels) != 5:
            raise LevelCountMismatchError(f"expected 5 channel counts, got {len(in_channels)}")
        self.d_out = d_out
        self.laterals = nn.ModuleList(nn.Conv2d(c, d_out, 1) for c in in_channels)
        self.smooths = nn.ModuleList(nn.Conv2d(d_out, d_out, 3, padding=1) for _ in range(4))
        self.final_proj = nn.Conv2d(d_out, d_out, 1)

    def forward(self, ms: MultiScaleFeatures) -> torch.Tensor:
        if len(ms.levels) != 5:
            raise LevelCountMismatchError(f"expected 5 levels, got {len(ms.levels)}")
        c = [lat(lv[None]) for lat, lv in zip(self.laterals, ms.levels)]
        p = c[4]
        for i in range(3, -1, -1):
            target = c[i].shape[-2:]
            if target[0] < p.shape[-2] or target[1] < p.shape[-1]:
                raise SpatialMismatchError(
                    f"level {i + 1} spatial dims {tuple(target)} smaller than "
                    f"upsampled top-down feature {tuple(p.shape[-2:])}"
                )
            up = F.interpolate(p, size=target, mode="nearest")
            p = self.smooths[i](up + c[i])
        y = self.final_proj(p)
        y = F.avg_pool2d(y, 2, stride=2, ceil_mode=True)
        return F.adaptive_avg_pool2d(y, 1).flatten()

    def last_level_only(self, ms: MultiScaleFeatures) -> torch.Tensor:
        """Ablation: pool the projected last level, skipping the top-down path."""
        if len(ms.levels) != 5:
            raise LevelCountMismatchError(f"expected 5 levels, got {len(ms.levels)}")
        return F.adaptive_avg_pool2d(self.laterals[4](ms.levels[4][None]), 1).flatten()


class Aggregator(nn.Module):
    """Concatenate backbone and neck conditions, project back to 1024."""

    def __init__(self, d: int = 1024):
        super().__init__()
        self.proj = nn.Linear(2 * d, d)

    def forward(self, e_backbone: torch.Tensor, e_neck: torch.Tensor) -> torch.Tensor:
        if e_backbone.shape[0] != e_neck.shape[0]:
            raise RowCountMismatchError(
                f"row counts differ: {e_backbone.shape[0]} vs {e_neck.shape[0]}"
            )
        return self.proj(torch.cat([e_backbone, e_neck], dim=1))


@dataclass
class ConditioningConfig:
    # 64 keeps the full-resolution FPN level affordable on CPU; raise it
    # when running on real hardware
    d_fusion: int = 64
    d_model: int = 512
    d_output: int = 1024
    layers: int = 4
    heads: int = 2
    rope_base: float = 10000.0
    rope_enabled: bool = True
    # ablation switches
    use_multi_level_fusion: bool = True
    use_backbone_path: bool = True
    use_transformers: bool = True
    seed: int = 0
    font_path: str | None = None

    def backbone_transformer_config(self) -> GlyphTransformerConfig:
        return GlyphTransformerConfig(
            d_local=self.d_fusion,
            d_global=self.d_fusion,
            d_model=self.d_model,
            d_output=self.d_output,
            layers=self.layers,
            heads=self.heads,
            rope_base=self.rope_base,
        )

    def neck_transformer_config(self) -> GlyphTransformerConfig:
        return GlyphTransformerConfig(
            d_local=D_NECK,
            d_global=D_NECK,
            d_model=self.d_model,
            d_output=self.d_output,
            layers=self.layers,
            heads=self.heads,
            rope_base=self.rope_base,
        )


class GlyphConditioner(nn.Module):
    """Full pipeline from text prompt to the denoiser condition."""

    def __init__(
        self,
        config: ConditioningConfig | None = None,
        encoder: OcrEncoder | None = None,
        font: FontSpec | None = None,
    ):
        super().__init__()
        self.config = config or ConditioningConfig()
        torch.manual_seed(self.config.seed)
        self.encoder = encoder or StubOcrEncoder(seed=self.config.seed)
        self.font = font or FontSpec(self.config.font_path)
        # fusion weights are shared between the local and global paths
        self.fusion = BackboneFusion(self.encoder.channels, self.config.d_fusion)
        self.transformer_backbone = GlyphTransformer(self.config.backbone_transformer_config())
        self.transformer_neck = GlyphTransformer(self.config.neck_transformer_config())
        self.aggregator = Aggregator(self.config.d_output)
        self.null_embedding = nn.Parameter(torch.zeros(self.config.d_output))
        # vanilla ablation path: absolute positions + linear projection
        self.abs_pos_embedding = nn.Parameter(torch.randn(N_MAX, D_NECK) * 0.02)
        self.vanilla_proj = nn.Linear(D_NECK, self.config.d_output)

    def fuse_backbone(self, ms: MultiScaleFeatures) -> torch.Tensor:
        if self.config.use_multi_level_fusion:
            return self.fusion(ms)
        return self.fusion.last_level_only(ms)

    def null_condition(self, n_rows: int) -> ConditionEmbedding:
        if n_rows < 1:
            raise RowCountMismatchError("n_rows must be >= 1")
        return ConditionEmbedding(self.null_embedding[None, :].expand(n_rows, -1))

    def build_condition(self, line: TextLine) -> ConditionEmbedding:
        glyphs = render_glyphs(line, self.font)
        local_feats = self.encoder.encode_batch(list(glyphs.local))
        global_feats = self.encoder.encode(glyphs.global_)

        neck_local = torch.stack([f.neck for f in local_feats])  # (N, 720)

        if not self.config.use_transformers:
            n = neck_local.shape[0]
            pos = self.abs_pos_embedding[:n].to(neck_local.dtype)
            return ConditionEmbedding(self.vanilla_proj(neck_local + pos))

        rope = self.config.rope_enabled
        e_neck = self.transformer_neck(neck_local, global_feats.neck[None, :], rope)
        if not self.config.use_backbone_path:
            return ConditionEmbedding(e_neck)

        fused_local = torch.stack([self.fuse_backbone(f.backbone) for f in local_feats])
        fused_global = self.fuse_backbone(global_feats.backbone)[None, :]
        e_backbone = self.transformer_backbone(fused_local, fused_global, rope)
        return ConditionEmbedding(self.aggregator(e_backbone, e_neck))
