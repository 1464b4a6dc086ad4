"""Noise schedule, DDIM update, classifier-free guidance, and the
desk-scale stand-in networks (toy VAE and toy UNet).

The VAE and UNet honor the real model's interface contracts (4-channel
latents at 1/8 resolution, 320-channel guided input, cross-attention to
an N x 1024 condition) while staying small enough to train and sample on
a CPU. Pretrained weights can be adapted in wherever shapes match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn
from torch.nn import functional as F

from .errors import BadShapeError, BadTimestepError, ConfigError, NonFiniteError
from .latent_guidance import LATENT_CHANNELS, UNET_WIDTH


class NoiseSchedule:
    """Linear beta schedule with cumulative products precomputed."""

    def __init__(self, T: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2):
        self.T = T
        self.betas = torch.linspace(beta_start, beta_end, T, dtype=torch.float64)
        if not ((self.betas > 0).all() and (self.betas < 1).all()):
            raise ConfigError("betas must lie strictly in (0, 1)")
        self.alpha_bars = torch.cumprod(1.0 - self.betas, dim=0)

    def add_noise(self, z0: torch.Tensor, t: int, eps: torch.Tensor) -> torch.Tensor:
        """Forward process: sqrt(ab_t) * z0 + sqrt(1 - ab_t) * eps."""
        if not 0 <= t < self.T:
            raise BadTimestepError(f"t={t} outside [0, {self.T})")
        if z0.shape != eps.shape:
            raise BadShapeError(f"z0 {tuple(z0.shape)} vs eps {tuple(eps.shape)}")
        ab = self.alpha_bars[t].to(z0.dtype)
        return torch.sqrt(ab) * z0 + torch.sqrt(1.0 - ab) * eps


def cfg_combine(eps_cond: torch.Tensor, eps_uncond: torch.Tensor, scale: float) -> torch.Tensor:
    """eps_uncond + scale * (eps_cond - eps_uncond), exact at 0 and 1."""
    if eps_cond.shape != eps_uncond.shape:
        raise BadShapeError("cfg branches must have matching shapes")
    if scale == 1.0:
        return eps_cond
    if scale == 0.0:
        return eps_uncond
    return eps_uncond + scale * (eps_cond - eps_uncond)


def ddim_timesteps(T: int, steps: int) -> list[int]:
    """Uniformly spaced timesteps from T-1 down to 0, inclusive."""
    if not 1 <= steps <= T:
        raise ConfigError(f"steps={steps} outside [1, {T}]")
    if steps == 1:
        return [T - 1]
    return [round(v) for v in torch.linspace(T - 1, 0, steps).tolist()]


def ddim_step(
    x: torch.Tensor, eps: torch.Tensor, ab_t: float, ab_prev: float
) -> torch.Tensor:
    """One deterministic DDIM update (eta = 0)."""
    x0 = (x - math.sqrt(1.0 - ab_t) * eps) / math.sqrt(ab_t)
    return math.sqrt(ab_prev) * x0 + math.sqrt(1.0 - ab_prev) * eps


def ddim_trajectory(eps_fn, x_start: torch.Tensor, timesteps: list[int], alpha_bars: torch.Tensor) -> torch.Tensor:
    """Run the deterministic DDIM recursion over the given timesteps.

    `eps_fn(x, t)` predicts the noise; the final update targets
    alpha_bar = 1, i.e. the clean-sample estimate.
    """
    x = x_start
    for i, t in enumerate(timesteps):
        eps = eps_fn(x, t)
        if not torch.isfinite(eps).all():
            raise NonFiniteError(f"non-finite noise prediction at t={t}")
        ab_t = float(alpha_bars[t])
        ab_prev = float(alpha_bars[timesteps[i + 1]]) if i + 1 < len(timesteps) else 1.0
        x = ddim_step(x, eps, ab_t, ab_prev)
    return x


@dataclass
class SamplerConfig:
    steps: int = 20
    cfg_scale: float = 3.0
    seed: int = 0
    eta: float = 0.0

    def __post_init__(self):
        if self.cfg_scale < 0:
            raise ConfigError("cfg_scale must be >= 0")
        if self.eta != 0.0:
            raise ConfigError("only deterministic sampling (eta = 0) is supported")


class ToyVAE(nn.Module):
    """Deterministic convolutional autoencoder: 3 x H x W -> 4 x H/8 x W/8."""

    def __init__(self, widths: tuple[int, int, int] = (32, 64, 128)):
        super().__init__()
        w1, w2, w3 = widths
        self.enc = nn.Sequential(
            nn.Conv2d(3, w1, 3, stride=2, padding=1), nn.SiLU(),
            nn.Conv2d(w1, w2, 3, stride=2, padding=1), nn.SiLU(),
            nn.Conv2d(w2, w3, 3, stride=2, padding=1), nn.SiLU(),
            nn.Conv2d(w3, LATENT_CHANNELS, 1),
        )
        self.dec = nn.Sequential(
            nn.Conv2d(LATENT_CHANNELS, w3, 1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(w3, w2, 3, padding=1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(w2, w1, 3, padding=1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(w1, 3, 3, padding=1),
        )

    @staticmethod
    def _check(image: torch.Tensor) -> None:
        if image.shape[-1] % 8 or image.shape[-2] % 8:
            raise BadShapeError(f"image dims must be divisible by 8, got {tuple(image.shape)}")

    def encode(self, image: torch.Tensor) -> torch.Tensor:
        self._check(image)
        if image.ndim == 3:
            return self.enc(image[None])[0]
        return self.enc(image)

    def decode(self, latent: torch.Tensor) -> torch.Tensor:
        if latent.ndim == 3:
            return torch.tanh(self.dec(latent[None]))[0]
        return torch.tanh(self.dec(latent))


def _timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.get_default_dtype()) / half)
    args = t[:, None].to(freqs.dtype) * freqs[None]
    return torch.cat([torch.cos(args), torch.sin(args)], dim=1)


class _ResBlock(nn.Module):
    def __init__(self, in_c: int, out_c: int, time_dim: int):
        super().__init__()
        groups = math.gcd(8, in_c)
        self.norm1 = nn.GroupNorm(groups, in_c)
        self.conv1 = nn.Conv2d(in_c, out_c, 3, padding=1)
        self.time_proj = nn.Linear(time_dim, out_c)
        self.norm2 = nn.GroupNorm(math.gcd(8, out_c), out_c)
        self.conv2 = nn.Conv2d(out_c, out_c, 3, padding=1)
        self.skip = nn.Conv2d(in_c, out_c, 1) if in_c != out_c else nn.Identity()

    def forward(self, x: torch.Tensor, t_emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.time_proj(t_emb)[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


class _CrossAttention(nn.Module):
    """Pixels attend to the N x d_cond condition embedding."""

    def __init__(self, channels: int, d_cond: int):
        super().__init__()
        self.norm = nn.GroupNorm(math.gcd(8, channels), channels)
        self.to_q = nn.Linear(channels, channels)
        self.to_k = nn.Linear(d_cond, channels)
        self.to_v = nn.Linear(d_cond, channels)
        self.out = nn.Linear(channels, channels)
        self.scale = channels ** -0.5

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        # x: (C, H, W); cond: (N, d_cond)
        c, h, w = x.shape
        seq = self.norm(x[None])[0].reshape(c, h * w).T  # (HW, C)
        q = self.to_q(seq)
        k = self.to_k(cond)
        v = self.to_v(cond)
        attn = torch.softmax(q @ k.T * self.scale, dim=-1)
        out = self.out(attn @ v)  # (HW, C)
        return x + out.T.reshape(c, h, w)


@dataclass
class ToyUNetConfig:
    base_width: int = 32
    time_dim: int = 64
    d_cond: int = 1024


class ToyUNet(nn.Module):
    """Three-level UNet over the 320-channel guided latent.

    The 320-wide input is immediately projected down to `base_width` to
    stay small; each resolution level cross-attends to the condition.
    Predicts the 4-channel latent noise.
    """

    def __init__(self, config: ToyUNetConfig | None = None):
        super().__init__()
        self.config = config or ToyUNetConfig()
        w, td = self.config.base_width, self.config.time_dim
        dc = self.config.d_cond
        self.time_mlp = nn.Sequential(nn.Linear(td, td), nn.SiLU(), nn.Linear(td, td))
        self.in_proj = nn.Conv2d(UNET_WIDTH, w, 1)
        self.down1 = _ResBlock(w, w, td)
        self.attn1 = _CrossAttention(w, dc)
        self.pool1 = nn.Conv2d(w, 2 * w, 3, stride=2, padding=1)
        self.down2 = _ResBlock(2 * w, 2 * w, td)
        self.attn2 = _CrossAttention(2 * w, dc)
        self.pool2 = nn.Conv2d(2 * w, 2 * w, 3, stride=2, padding=1)
        self.mid = _ResBlock(2 * w, 2 * w, td)
        self.attn_mid = _CrossAttention(2 * w, dc)
        self.up2 = _ResBlock(4 * w, 2 * w, td)
        self.up1 = _ResBlock(3 * w, w, td)
        self.out_norm = nn.GroupNorm(math.gcd(8, w), w)
        self.out_conv = nn.Conv2d(w, LATENT_CHANNELS, 3, padding=1)

    def forward(self, z: torch.Tensor, cond: torch.Tensor, t: int) -> torch.Tensor:
        """z: (320, 64, 64); cond: (N, d_cond); returns (4, 64, 64)."""
        if z.ndim != 3 or z.shape[0] != UNET_WIDTH:
            raise BadShapeError(f"guided latent must be ({UNET_WIDTH}, H, W), got {tuple(z.shape)}")
        dtype = self.out_conv.weight.dtype
        t_emb = self.time_mlp(
            _timestep_embedding(torch.tensor([float(t)]), self.config.time_dim).to(dtype)
        )
        x = self.in_proj(z[None])
        h1 = self.down1(x, t_emb)
        h1 = self.attn1(h1[0], cond)[None]
        h2 = self.down2(self.pool1(h1), t_emb)
        h2 = self.attn2(h2[0], cond)[None]
        m = self.mid(self.pool2(h2), t_emb)
        m = self.attn_mid(m[0], cond)[None]
        u2 = F.interpolate(m, scale_factor=2, mode="nearest")
        u2 = self.up2(torch.cat([u2, h2], dim=1), t_emb)
        u1 = F.interpolate(u2, scale_factor=2, mode="nearest")
        u1 = self.up1(torch.cat([u1, h1], dim=1), t_emb)
        return self.out_conv(F.silu(self.out_norm(u1)))[0]
