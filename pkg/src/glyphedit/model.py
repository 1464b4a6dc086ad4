"""The complete editing model: conditioning, guidance, denoiser, VAE.

Bundles the trainable modules with the frozen ones, implements the
denoising training loss and DDIM sampling with classifier-free guidance,
and owns checkpoint serialization.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .conditioning import ConditionEmbedding, GlyphConditioner
from .config import RunConfig, config_from_dict
from .data import TextRegionSample
from .diffusion import (
    NoiseSchedule,
    SamplerConfig,
    ToyUNet,
    ToyUNetConfig,
    ToyVAE,
    cfg_combine,
    ddim_step,
    ddim_timesteps,
)
from .errors import CheckpointError, NonFiniteError
from .geometry import interpolate_mask
from .glyph_render import TextLine
from .latent_guidance import InpaintInput, LatentGuidance, extract_style_crop, mask_out_region

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class SampleEncoding:
    """Frozen per-sample tensors reused across denoising steps."""

    latent_mask: torch.Tensor  # (1, 64, 64)
    masked_latent: torch.Tensor  # (4, 64, 64)
    style_crop: object  # StyleCrop | None
    clean_latent: torch.Tensor | None = None  # (4, 64, 64), training only


class EditorModel(nn.Module):
    """Everything needed to train and sample, behind one object."""

    def __init__(self, config: RunConfig | None = None):
        super().__init__()
        self.run_config = config or RunConfig()
        cfg = self.run_config
        torch.manual_seed(cfg.seed)
        self.schedule = NoiseSchedule(
            cfg.diffusion.T, cfg.diffusion.beta_start, cfg.diffusion.beta_end
        )
        self.conditioner = GlyphConditioner(cfg.conditioning)
        self.guidance = LatentGuidance(use_style_encoder=cfg.latent.use_style_encoder)
        self.unet = ToyUNet(ToyUNetConfig(base_width=cfg.diffusion.unet_width))
        self.vae = ToyVAE(cfg.diffusion.vae_widths)
        # the VAE stands in for pretrained weights and stays frozen here
        for p in self.vae.parameters():
            p.requires_grad_(False)

    def trainable_parameters(self):
        for module in (self.conditioner, self.guidance, self.unet):
            yield from (p for p in module.parameters() if p.requires_grad)

    def weight_checksum(self) -> str:
        h = hashlib.sha256()
        for name, p in sorted(self.state_dict().items()):
            h.update(name.encode())
            h.update(p.detach().numpy().tobytes())
        h.update(self.conditioner.encoder.weight_checksum().encode())
        return h.hexdigest()

    # -- per-sample encoding (frozen parts only) --------------------------

    def encode_sample(self, sample: TextRegionSample, with_clean: bool = False) -> SampleEncoding:
        with torch.no_grad():
            masked = mask_out_region(sample.image, sample.mask)
            masked_latent = self.vae.encode(masked)
            clean = self.vae.encode(sample.image) if with_clean else None
        h = sample.image.shape[-2] // 8
        w = sample.image.shape[-1] // 8
        return SampleEncoding(
            latent_mask=interpolate_mask(sample.mask, h, w),
            masked_latent=masked_latent,
            style_crop=sample.style_crop if self.guidance.use_style_encoder else None,
            clean_latent=clean,
        )

    # -- denoising --------------------------------------------------------

    def predict_eps(
        self, noisy_latent: torch.Tensor, enc: SampleEncoding, cond: ConditionEmbedding, t: int
    ) -> torch.Tensor:
        inp = InpaintInput(
            latent=noisy_latent, mask=enc.latent_mask, masked_latent=enc.masked_latent
        )
        guided = self.guidance(inp, enc.style_crop)
        return self.unet(guided.z_t, cond.e_final, t)

    def training_loss(
        self,
        batch: list[tuple[TextRegionSample, SampleEncoding]],
        rng: torch.Generator,
        null_prob: float = 0.1,
    ) -> torch.Tensor:
        """Mean squared error between the true and predicted noise."""
        losses = []
        for sample, enc in batch:
            t = int(torch.randint(self.schedule.T, (1,), generator=rng))
            eps = torch.randn(enc.clean_latent.shape, generator=rng)
            z_t = self.schedule.add_noise(enc.clean_latent, t, eps)
            if float(torch.rand((), generator=rng)) < null_prob:
                cond = self.conditioner.null_condition(len(sample.text))
            else:
                cond = self.conditioner.build_condition(sample.text)
            pred = self.predict_eps(z_t, enc, cond, t)
            losses.append(((eps - pred) ** 2).mean())
        loss = torch.stack(losses).mean()
        if not torch.isfinite(loss):
            raise NonFiniteError("training loss is NaN/Inf")
        return loss

    # -- sampling ---------------------------------------------------------

    @torch.no_grad()
    def ddim_sample(
        self,
        sample: TextRegionSample,
        target_text: TextLine,
        cfg: SamplerConfig | None = None,
        force_both_branches: bool = False,
    ) -> torch.Tensor:
        """Edit the sample's region to show `target_text`.

        Deterministic for a fixed seed; pixels outside the mask are
        copied from the input bit-exactly. Returns (3, 512, 512).
        """
        cfg = cfg or self.run_config.sampler
        enc = self.encode_sample(sample)
        cond = self.conditioner.build_condition(target_text)
        null = self.conditioner.null_condition(cond.rows)

        gen = torch.Generator().manual_seed(cfg.seed)
        x = torch.randn(enc.masked_latent.shape, generator=gen)
        timesteps = ddim_timesteps(self.schedule.T, cfg.steps)
        use_null = cfg.cfg_scale != 1.0 or force_both_branches
        for i, t in enumerate(timesteps):
            eps_cond = self.predict_eps(x, enc, cond, t)
            if use_null:
                eps_uncond = self.predict_eps(x, enc, null, t)
                eps = cfg_combine(eps_cond, eps_uncond, cfg.cfg_scale)
            else:
                eps = eps_cond
            if not torch.isfinite(eps).all():
                raise NonFiniteError(f"non-finite noise prediction at t={t}")
            ab_t = float(self.schedule.alpha_bars[t])
            ab_prev = (
                float(self.schedule.alpha_bars[timesteps[i + 1]])
                if i + 1 < len(timesteps)
                else 1.0
            )
            x = ddim_step(x, eps, ab_t, ab_prev)

        decoded = self.vae.decode(x)
        mask = sample.mask
        return torch.where(mask.bool().expand_as(decoded), decoded, sample.image)


def save_checkpoint(model: EditorModel, path: str | Path, step: int = 0) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": model.run_config.to_dict(),
        "state": model.state_dict(),
        "betas": model.schedule.betas,
        "step": step,
    }
    torch.save(payload, str(path))


def load_checkpoint(path: str | Path) -> tuple[EditorModel, int]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(str(path), weights_only=False)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version: {version}")
    config = config_from_dict(payload["config"])
    model = EditorModel(config)
    model.load_state_dict(payload["state"])
    if not torch.equal(payload["betas"], model.schedule.betas):
        raise CheckpointError("checkpoint schedule constants disagree with config")
    return model, int(payload.get("step", 0))
