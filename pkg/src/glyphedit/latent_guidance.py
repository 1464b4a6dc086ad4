"""Style-and-position guidance injected at the denoiser input.

The standard inpainting triple (noisy latent, mask, masked-image latent)
forms a 9-channel stack that the widened input convolution maps to the
denoiser's base width. A small convolutional style encoder, closed off
by a zero-initialized 1x1 convolution, adds appearance information from
the original text region; the fusion convolution starts as identity on
the inpainting channels so the model begins as a plain inpainting LDM.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .errors import BadShapeError, NonFiniteError
from .geometry import (
    Polygon,
    crop_bbox,
    interpolate_mask,
    polygon_to_mask,
    resize_image,
)

LATENT_CHANNELS = 4
UNET_WIDTH = 320
STYLE_SIZE = 128
STYLE_CHANNELS = 128


@dataclass
class StyleCrop:
    """RGB crop of the (pre-edit) text region, (3, 128, 128) in [-1, 1]."""

    pixels: torch.Tensor

    def __post_init__(self):
        if tuple(self.pixels.shape) != (3, STYLE_SIZE, STYLE_SIZE):
            raise BadShapeError(
                f"style crop must be (3, {STYLE_SIZE}, {STYLE_SIZE}), "
                f"got {tuple(self.pixels.shape)}"
            )
        if not torch.isfinite(self.pixels).all():
            raise NonFiniteError("style crop contains NaN/Inf")


@dataclass
class InpaintInput:
    """The 9-channel inpainting stack at latent resolution."""

    latent: torch.Tensor  # (4, 64, 64) noisy latent at time t
    mask: torch.Tensor  # (1, 64, 64), strictly binary
    masked_latent: torch.Tensor  # (4, 64, 64)

    def __post_init__(self):
        for name, t, c in (
            ("latent", self.latent, LATENT_CHANNELS),
            ("mask", self.mask, 1),
            ("masked_latent", self.masked_latent, LATENT_CHANNELS),
        ):
            if t.ndim != 3 or t.shape[0] != c:
                raise BadShapeError(f"{name} must have {c} channels, got {tuple(t.shape)}")
        if self.latent.shape[1:] != self.mask.shape[1:] or self.latent.shape[1:] != self.masked_latent.shape[1:]:
            raise BadShapeError("inpaint input spatial dims disagree")

    def as_channels(self) -> torch.Tensor:
        """Fixed channel order: latent, mask, masked latent (9 total)."""
        return torch.cat([self.latent, self.mask, self.masked_latent], dim=0)


@dataclass
class GuidedLatent:
    """The denoiser input feature map, (320, 64, 64)."""

    z_t: torch.Tensor

    def __post_init__(self):
        if self.z_t.ndim != 3 or self.z_t.shape[0] != UNET_WIDTH:
            raise BadShapeError(f"guided latent must have {UNET_WIDTH} channels")
        if not torch.isfinite(self.z_t).all():
            raise NonFiniteError("guided latent contains NaN/Inf")


class StyleEncoder(nn.Module):
    """Two stride-2 convolutions followed by the zero module.

    Output is exactly zero at initialization, so the style branch starts
    as a no-op and learns its influence during training.
    """

    def __init__(self):
        super().__init__()
        # one net x2 downsample: 3x128x128 -> 128x64x64
        self.conv1 = nn.Conv2d(3, 64, 3, stride=2, padding=1)
        self.conv2 = nn.Conv2d(64, STYLE_CHANNELS, 3, stride=1, padding=1)
        self.zero_conv = nn.Conv2d(STYLE_CHANNELS, STYLE_CHANNELS, 1)
        with torch.no_grad():
            self.zero_conv.weight.zero_()
            self.zero_conv.bias.zero_()
        self.act = nn.SiLU()

    def forward(self, crop: StyleCrop) -> torch.Tensor:
        x = self.act(self.conv1(crop.pixels[None]))
        x = self.act(self.conv2(x))
        return self.zero_conv(x)[0]  # (128, 64, 64)


class LatentGuidance(nn.Module):
    """Input convolution, style encoder, and the fusion convolution."""

    def __init__(self, use_style_encoder: bool = True):
        super().__init__()
        self.use_style_encoder = use_style_encoder
        self.input_conv = nn.Conv2d(9, UNET_WIDTH, 3, padding=1)
        self.style_encoder = StyleEncoder()
        self.fuse_conv = nn.Conv2d(UNET_WIDTH + STYLE_CHANNELS, UNET_WIDTH, 1)
        with torch.no_grad():
            # identity on the inpainting channels, zero on the style channels:
            # at initialization fuse(y, s) == y bit-exactly
            self.fuse_conv.weight.zero_()
            for i in range(UNET_WIDTH):
                self.fuse_conv.weight[i, i, 0, 0] = 1.0
            self.fuse_conv.bias.zero_()

    def encode_style(self, crop: StyleCrop) -> torch.Tensor:
        return self.style_encoder(crop)

    def form_inpaint_features(self, inp: InpaintInput) -> torch.Tensor:
        return self.input_conv(inp.as_channels()[None])[0]  # (320, 64, 64)

    def fuse_latents(self, y_inpaint: torch.Tensor, y_style: torch.Tensor) -> GuidedLatent:
        if y_inpaint.shape[0] != UNET_WIDTH:
            raise BadShapeError(f"y_inpaint must have {UNET_WIDTH} channels")
        if y_style.shape[0] != STYLE_CHANNELS:
            raise BadShapeError(f"y_style must have {STYLE_CHANNELS} channels")
        if y_inpaint.shape[1:] != y_style.shape[1:]:
            raise BadShapeError("spatial dims of y_inpaint and y_style disagree")
        stacked = torch.cat([y_inpaint, y_style], dim=0)
        return GuidedLatent(self.fuse_conv(stacked[None])[0])

    def forward(self, inp: InpaintInput, style: StyleCrop | None) -> GuidedLatent:
        y_inpaint = self.form_inpaint_features(inp)
        if not self.use_style_encoder or style is None:
            return GuidedLatent(y_inpaint)
        y_style = self.encode_style(style)
        return self.fuse_latents(y_inpaint, y_style)


def extract_style_crop(image: torch.Tensor, polygon: Polygon) -> StyleCrop:
    """Bounding-box crop of the original region, resized to 128x128."""
    crop = crop_bbox(image, polygon)
    return StyleCrop(resize_image(crop, STYLE_SIZE, STYLE_SIZE))


def mask_out_region(image: torch.Tensor, mask: torch.Tensor, fill: float = 0.0) -> torch.Tensor:
    """Erase the masked region to mid-gray (0 in [-1, 1])."""
    return image * (1 - mask) + fill * mask


def build_guided_latent(
    image: torch.Tensor,
    polygon: Polygon,
    noisy_latent_t: torch.Tensor,
    vae,
    guidance: LatentGuidance,
) -> GuidedLatent:
    """Compose the full guidance path for one (image, polygon) pair.

    `image` is (3, H, W) in [-1, 1] with H, W divisible by 8;
    `noisy_latent_t` is the diffusion state being denoised.
    """
    _, h, w = image.shape
    mask = polygon_to_mask(polygon, h, w)
    masked_latent = vae.encode(mask_out_region(image, mask))
    latent_mask = interpolate_mask(mask, h // 8, w // 8)
    inp = InpaintInput(latent=noisy_latent_t, mask=latent_mask, masked_latent=masked_latent)
    style = extract_style_crop(image, polygon) if guidance.use_style_encoder else None
    return guidance(inp, style)
