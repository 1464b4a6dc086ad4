from pathlib import Path

import pytest
import torch

from glyphedit.data import load_manifest, sample_pair
from glyphedit.glyph_render import FontSpec

torch.set_num_threads(4)

FIXTURES = Path(__file__).parent / "fixtures"
TOYSET = FIXTURES / "toyset"
MANIFEST = TOYSET / "manifest.jsonl"


@pytest.fixture(scope="session")
def font():
    return FontSpec()


@pytest.fixture(scope="session")
def toy_records():
    return list(load_manifest(MANIFEST))


@pytest.fixture(scope="session")
def toy_samples(toy_records):
    rng = torch.Generator().manual_seed(0)
    return [sample_pair(r, rng) for r in toy_records[:8]]


def small_run_config():
    from glyphedit.config import RunConfig

    cfg = RunConfig()
    cfg.conditioning.d_fusion = 16
    cfg.conditioning.d_model = 32
    cfg.conditioning.layers = 1
    cfg.diffusion.unet_width = 16
    cfg.diffusion.vae_widths = (8, 16, 32)
    cfg.sampler.steps = 2
    return cfg


@pytest.fixture(scope="session")
def small_model():
    from glyphedit.model import EditorModel

    return EditorModel(small_run_config())


@pytest.fixture(scope="session")
def small_checkpoint(small_model, tmp_path_factory):
    from glyphedit.model import save_checkpoint

    path = tmp_path_factory.mktemp("ckpt") / "model.pt"
    save_checkpoint(small_model, path, step=0)
    return path
