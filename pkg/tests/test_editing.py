import pytest
import torch

from glyphedit.diffusion import SamplerConfig
from glyphedit.editing import edit_image, mask_to_polygon, parse_text
from glyphedit.errors import BadInputError


def test_parse_text_maps_errors():
    with pytest.raises(BadInputError, match="20"):
        parse_text("x" * 25)
    with pytest.raises(BadInputError):
        parse_text("   ")
    assert parse_text(" ok ").text == "ok"


def test_mask_to_polygon_bbox():
    mask = torch.zeros(1, 32, 32)
    mask[0, 5:11, 8:20] = 1
    assert mask_to_polygon(mask) == [(8.0, 5.0), (20.0, 5.0), (20.0, 11.0), (8.0, 11.0)]


def test_mask_to_polygon_empty():
    with pytest.raises(BadInputError, match="empty"):
        mask_to_polygon(torch.zeros(1, 8, 8))


def test_edit_image_requires_exactly_one_region(small_model):
    image = torch.zeros(3, 64, 64)
    with pytest.raises(BadInputError):
        edit_image(small_model, image, "hi")
    with pytest.raises(BadInputError):
        edit_image(
            small_model, image, "hi",
            polygon=[(0.0, 0.0), (8.0, 0.0), (8.0, 8.0)],
            mask=torch.ones(1, 64, 64),
        )


def test_edit_image_bounds_checks(small_model):
    image = torch.zeros(3, 64, 64)
    with pytest.raises(BadInputError, match="outside"):
        edit_image(small_model, image, "hi", polygon=[(0.0, 0.0), (99.0, 0.0), (99.0, 9.0)])
    with pytest.raises(BadInputError, match="dimensions"):
        edit_image(small_model, image, "hi", mask=torch.ones(1, 32, 32))


def test_edit_image_nonsquare_dims_preserved(small_model):
    gen = torch.Generator().manual_seed(0)
    image = torch.rand(3, 96, 160, generator=gen) * 2 - 1
    poly = [(20.0, 20.0), (120.0, 20.0), (120.0, 60.0), (20.0, 60.0)]
    out, timings = edit_image(
        small_model, image, "ab", polygon=poly, sampler=SamplerConfig(steps=1, seed=0)
    )
    assert out.shape == image.shape
    mask = torch.zeros(1, 96, 160, dtype=torch.bool)
    mask[:, 20:60, 20:120] = True
    assert torch.equal(out[(~mask).expand_as(out)], image[(~mask).expand_as(out)])
    assert set(timings) == {"prepare_ms", "sample_ms", "composite_ms"}
