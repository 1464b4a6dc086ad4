import math

import pytest
import torch

from glyphedit.diffusion import (
    NoiseSchedule,
    SamplerConfig,
    ToyUNet,
    ToyUNetConfig,
    ToyVAE,
    cfg_combine,
    ddim_step,
    ddim_timesteps,
    ddim_trajectory,
)
from glyphedit.errors import BadShapeError, BadTimestepError, ConfigError


@pytest.fixture(scope="module")
def schedule():
    return NoiseSchedule()


class TestNoiseSchedule:
    def test_alpha_bars_monotone_decreasing(self, schedule):
        ab = schedule.alpha_bars
        assert (ab[1:] < ab[:-1]).all()
        assert 0.99 < ab[0] < 1.0
        assert ((ab > 0) & (ab < 1)).all()

    def test_betas_in_open_interval(self, schedule):
        assert schedule.betas[0] == pytest.approx(1e-4)
        assert schedule.betas[-1] == pytest.approx(2e-2)
        assert (schedule.betas[1:] >= schedule.betas[:-1]).all()

    def test_add_noise_zero_eps(self, schedule):
        z0 = torch.ones(4, 8, 8)
        out = schedule.add_noise(z0, 10, torch.zeros_like(z0))
        expected = math.sqrt(float(schedule.alpha_bars[10]))
        assert torch.allclose(out, torch.full_like(z0, expected), atol=1e-6)

    def test_add_noise_near_identity_at_t0(self, schedule):
        # weight on z0 at t=0 differs from 1 by less than 1e-2
        assert abs(math.sqrt(float(schedule.alpha_bars[0])) - 1.0) < 1e-2

    def test_last_timestep_mostly_noise(self, schedule):
        # schedule constants evaluated numerically: z0 weight < 0.1 at T-1
        assert math.sqrt(float(schedule.alpha_bars[-1])) < 0.1

    def test_bad_timestep(self, schedule):
        with pytest.raises(BadTimestepError):
            schedule.add_noise(torch.zeros(2), 1000, torch.zeros(2))
        with pytest.raises(BadTimestepError):
            schedule.add_noise(torch.zeros(2), -1, torch.zeros(2))

    def test_shape_mismatch(self, schedule):
        with pytest.raises(BadShapeError):
            schedule.add_noise(torch.zeros(2), 0, torch.zeros(3))

    def test_variance_monte_carlo(self, schedule):
        """Var(add_noise) == ab_t * Var(z0) + (1 - ab_t) for unit normals."""
        gen = torch.Generator().manual_seed(0)
        t = 400
        z0 = torch.randn(10_000, generator=gen)
        eps = torch.randn(10_000, generator=gen)
        out = schedule.add_noise(z0, t, eps)
        ab = float(schedule.alpha_bars[t])
        expected = ab * z0.var().item() + (1 - ab)
        assert abs(out.var().item() - expected) / expected < 0.05


class TestCfgCombine:
    def test_scale_one_exact(self):
        gen = torch.Generator().manual_seed(0)
        a, b = torch.randn(4, 4, generator=gen), torch.randn(4, 4, generator=gen)
        assert torch.equal(cfg_combine(a, b, 1.0), a)

    def test_scale_zero_exact(self):
        gen = torch.Generator().manual_seed(1)
        a, b = torch.randn(4, 4, generator=gen), torch.randn(4, 4, generator=gen)
        assert torch.equal(cfg_combine(a, b, 0.0), b)

    def test_equal_branches_any_scale(self):
        gen = torch.Generator().manual_seed(2)
        a = torch.randn(4, 4, generator=gen)
        for s in (0.0, 0.7, 1.0, 3.0, 9.0):
            assert torch.allclose(cfg_combine(a, a.clone(), s), a, atol=1e-6)

    def test_linear_form(self):
        v = torch.ones(3)
        assert torch.allclose(cfg_combine(v, torch.zeros(3), 3.0), 3 * v)

    def test_affine_in_scale(self):
        gen = torch.Generator().manual_seed(3)
        a, b = torch.randn(5, generator=gen), torch.randn(5, generator=gen)
        mid = cfg_combine(a, b, 2.0)
        lerp = 0.5 * (cfg_combine(a, b, 1.0) + cfg_combine(a, b, 3.0))
        assert torch.allclose(mid, lerp, atol=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(BadShapeError):
            cfg_combine(torch.zeros(2), torch.zeros(3), 1.0)


class TestDdim:
    def test_timesteps_endpoints(self):
        ts = ddim_timesteps(1000, 20)
        assert len(ts) == 20
        assert ts[0] == 999 and ts[-1] == 0
        assert ts == sorted(ts, reverse=True)

    def test_timesteps_single(self):
        assert ddim_timesteps(1000, 1) == [999]

    def test_timesteps_bounds(self):
        with pytest.raises(ConfigError):
            ddim_timesteps(1000, 0)
        with pytest.raises(ConfigError):
            ddim_timesteps(1000, 1001)

    def test_step_reconstructs_x0_for_perfect_eps(self):
        # if eps is the exact noise, the ab_prev=1 update returns z0
        schedule = NoiseSchedule()
        gen = torch.Generator().manual_seed(0)
        z0 = torch.randn(4, 8, 8, generator=gen)
        eps = torch.randn(4, 8, 8, generator=gen)
        t = 500
        x = schedule.add_noise(z0, t, eps).float()
        out = ddim_step(x, eps, float(schedule.alpha_bars[t]), 1.0)
        assert torch.allclose(out, z0, atol=1e-5)

    def test_full_trajectory_matches_scalar_oracle(self):
        """Deterministic 1-D run vs the same recursion in plain floats.

        The noise model is linear in x (the exact posterior eps for a
        Gaussian data distribution), so the whole trajectory has a
        closed scalar form that an independent float loop can follow.
        """
        schedule = NoiseSchedule()
        ab = schedule.alpha_bars

        mean, std = 2.0, 0.5

        def eps_fn(x, t):
            a = float(ab[t])
            denom = math.sqrt(a * std**2 + (1 - a))
            return (x - math.sqrt(a) * mean) * math.sqrt(1 - a) / denom**2

        timesteps = list(range(999, -1, -1))
        x0 = torch.tensor([1.7], dtype=torch.float64)
        result = ddim_trajectory(
            lambda x, t: eps_fn(x, t), x0, timesteps, ab
        )

        x = 1.7
        for i, t in enumerate(timesteps):
            a = float(ab[t])
            e = (x - math.sqrt(a) * mean) * math.sqrt(1 - a) / (a * std**2 + (1 - a))
            x0_hat = (x - math.sqrt(1 - a) * e) / math.sqrt(a)
            a_prev = float(ab[timesteps[i + 1]]) if i + 1 < len(timesteps) else 1.0
            x = math.sqrt(a_prev) * x0_hat + math.sqrt(1 - a_prev) * e
        assert abs(float(result) - x) < 1e-4

    def test_sampler_config_validation(self):
        with pytest.raises(ConfigError):
            SamplerConfig(cfg_scale=-1)
        with pytest.raises(ConfigError):
            SamplerConfig(eta=0.5)


class TestToyVAE:
    def test_latent_shape(self):
        vae = ToyVAE()
        lat = vae.encode(torch.zeros(3, 512, 512))
        assert lat.shape == (4, 64, 64)

    def test_roundtrip_shape(self):
        vae = ToyVAE()
        x = torch.zeros(3, 64, 64)
        assert vae.decode(vae.encode(x)).shape == x.shape

    def test_dims_divisible_by_8(self):
        with pytest.raises(BadShapeError):
            ToyVAE().encode(torch.zeros(3, 65, 64))

    def test_reconstruction_trains(self):
        """Brief reconstruction training on 64 toy images drives MSE
        below 0.05 in the [-1, 1] range."""
        torch.manual_seed(0)
        vae = ToyVAE(widths=(16, 32, 64))
        gen = torch.Generator().manual_seed(0)
        # smooth random images: low-frequency patterns upsampled
        base = torch.rand(64, 3, 4, 4, generator=gen) * 2 - 1
        images = torch.nn.functional.interpolate(base, size=(32, 32), mode="bilinear", align_corners=False)
        opt = torch.optim.Adam(vae.parameters(), lr=2e-3)
        for step in range(500):
            idx = torch.randint(64, (16,), generator=gen)
            batch = images[idx]
            recon = vae.decode(vae.encode(batch))
            loss = ((recon - batch) ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
        with torch.no_grad():
            final = ((vae.decode(vae.encode(images)) - images) ** 2).mean()
        assert float(final) < 0.05


class TestToyUNet:
    def test_output_shape(self):
        unet = ToyUNet(ToyUNetConfig(base_width=8))
        out = unet(torch.randn(320, 64, 64), torch.randn(5, 1024), 10)
        assert out.shape == (4, 64, 64)

    def test_input_width_enforced(self):
        unet = ToyUNet(ToyUNetConfig(base_width=8))
        with pytest.raises(BadShapeError):
            unet(torch.randn(64, 64, 64), torch.randn(5, 1024), 10)

    def test_condition_changes_output(self):
        torch.manual_seed(0)
        unet = ToyUNet(ToyUNetConfig(base_width=8))
        gen = torch.Generator().manual_seed(0)
        z = torch.randn(320, 16, 16, generator=gen)
        a = unet(z, torch.randn(5, 1024, generator=gen), 10)
        b = unet(z, torch.randn(5, 1024, generator=gen), 10)
        assert (a - b).abs().max() > 1e-6

    def test_timestep_changes_output(self):
        torch.manual_seed(0)
        unet = ToyUNet(ToyUNetConfig(base_width=8))
        gen = torch.Generator().manual_seed(1)
        z = torch.randn(320, 16, 16, generator=gen)
        cond = torch.randn(3, 1024, generator=gen)
        assert (unet(z, cond, 10) - unet(z, cond, 900)).abs().max() > 1e-6
