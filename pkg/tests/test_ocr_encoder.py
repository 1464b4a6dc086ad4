import numpy as np
import pytest
import torch

from glyphedit.errors import BadShapeError
from glyphedit.glyph_render import GLOBAL_H, GLOBAL_W, LOCAL_H, LOCAL_W, TextLine, render_local
from glyphedit.ocr_encoder import (
    D_NECK,
    STUB_CHANNELS,
    MultiScaleFeatures,
    StubOcrEncoder,
    expected_level_dims,
)


@pytest.fixture(scope="module")
def encoder():
    return StubOcrEncoder(seed=0)


def test_expected_level_dims_oracle():
    # stride schedule: full resolution, then four halvings (ceil division)
    h, w = GLOBAL_H, GLOBAL_W
    dims, cur = [], (h, w)
    dims.append(cur)
    for _ in range(4):
        cur = ((cur[0] + 1) // 2, (cur[1] + 1) // 2)
        dims.append(cur)
    assert expected_level_dims(h, w) == dims
    assert dims == [(48, 320), (24, 160), (12, 80), (6, 40), (3, 20)]


def test_global_encode_shapes(encoder):
    feats = encoder.encode(np.zeros((GLOBAL_H, GLOBAL_W), dtype=np.float32))
    assert len(feats.backbone.levels) == 5
    assert feats.backbone.channels == STUB_CHANNELS
    for lv, (eh, ew) in zip(feats.backbone.levels, expected_level_dims(GLOBAL_H, GLOBAL_W)):
        assert lv.shape[-2:] == (eh, ew)
    assert feats.neck.shape == (D_NECK,)
    assert torch.isfinite(feats.neck).all()


def test_local_encode_shapes(encoder):
    feats = encoder.encode(np.zeros((LOCAL_H, LOCAL_W), dtype=np.float32))
    for lv, (eh, ew) in zip(feats.backbone.levels, expected_level_dims(LOCAL_H, LOCAL_W)):
        assert lv.shape[-2:] == (eh, ew)


def test_spatial_dims_non_increasing(encoder):
    feats = encoder.encode(np.zeros((GLOBAL_H, GLOBAL_W), dtype=np.float32))
    hs = [lv.shape[-2] for lv in feats.backbone.levels]
    ws = [lv.shape[-1] for lv in feats.backbone.levels]
    assert hs == sorted(hs, reverse=True) and ws == sorted(ws, reverse=True)
    assert hs[0] > hs[-1] and ws[0] > ws[-1]


def test_bad_shape_rejected(encoder):
    with pytest.raises(BadShapeError):
        encoder.encode(np.zeros((10, 10), dtype=np.float32))


def test_determinism(encoder, font):
    img = render_local(TextLine("k"), font)[0]
    a, b = encoder.encode(img), encoder.encode(img)
    assert torch.equal(a.neck, b.neck)
    for la, lb in zip(a.backbone.levels, b.backbone.levels):
        assert torch.equal(la, lb)


def test_same_seed_same_weights():
    assert StubOcrEncoder(seed=3).weight_checksum() == StubOcrEncoder(seed=3).weight_checksum()
    assert StubOcrEncoder(seed=3).weight_checksum() != StubOcrEncoder(seed=4).weight_checksum()


def test_batch_loop_equivalence(encoder, font):
    imgs = list(render_local(TextLine("abc"), font))
    batched = encoder.encode_batch(imgs)
    for img, bf in zip(imgs, batched):
        sf = encoder.encode(img)
        assert (sf.neck - bf.neck).abs().max() <= 1e-6
        for ls, lb in zip(sf.backbone.levels, bf.backbone.levels):
            assert (ls - lb).abs().max() <= 1e-6


def test_empty_batch(encoder):
    assert encoder.encode_batch([]) == []


def test_distinct_characters_distinct_necks(encoder, font):
    imgs = list(render_local(TextLine("abcde"), font))
    necks = [f.neck for f in encoder.encode_batch(imgs)]
    for i in range(len(necks)):
        for j in range(i + 1, len(necks)):
            assert (necks[i] - necks[j]).norm() > 1e-3


def test_weights_frozen(encoder):
    for p in encoder.parameters():
        assert not p.requires_grad


def test_five_level_invariant():
    with pytest.raises(BadShapeError):
        MultiScaleFeatures([torch.zeros(1, 2, 2)] * 4)
