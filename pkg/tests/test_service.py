import base64
import io

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient
from PIL import Image

from glyphedit import __version__
from glyphedit.service import MAX_PENDING, create_app


@pytest.fixture(scope="module")
def client(small_model):
    return TestClient(create_app(small_model))


@pytest.fixture(scope="module")
def empty_client():
    return TestClient(create_app(None))


def png_b64(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


@pytest.fixture(scope="module")
def image_b64():
    rng = np.random.RandomState(0)
    return png_b64(rng.randint(0, 255, size=(96, 128, 3)).astype(np.uint8))


def edit_payload(image_b64, **overrides):
    payload = {
        "image": image_b64,
        "polygon": [[10, 10], [80, 10], [80, 50], [10, 50]],
        "text": "hi",
        "cfg_scale": 1.0,
        "steps": 1,
        "seed": 0,
    }
    payload.update(overrides)
    return payload


class TestHealthAndConfig:
    def test_health_with_model(self, client):
        body = client.get("/api/v1/health").json()
        assert body == {"version": __version__, "model_loaded": True}

    def test_health_without_model(self, empty_client):
        assert empty_client.get("/api/v1/health").json()["model_loaded"] is False

    def test_config_sanitized(self, client):
        resp = client.get("/api/v1/config")
        assert resp.status_code == 200
        cfg = resp.json()
        assert "checkpoint" not in cfg
        assert "manifest" not in cfg.get("data", {})
        assert "font_path" not in cfg.get("conditioning", {})
        assert cfg["diffusion"]["T"] == 1000

    def test_config_without_model_503(self, empty_client):
        assert empty_client.get("/api/v1/config").status_code == 503


class TestEditValidation:
    def test_both_polygon_and_mask_rejected(self, client, image_b64):
        payload = edit_payload(image_b64, mask=image_b64)
        resp = client.post("/api/v1/edit", json=payload)
        assert resp.status_code == 422
        assert "exactly one" in str(resp.json())

    def test_neither_polygon_nor_mask_rejected(self, client, image_b64):
        payload = edit_payload(image_b64)
        del payload["polygon"]
        assert client.post("/api/v1/edit", json=payload).status_code == 422

    def test_two_point_polygon_rejected(self, client, image_b64):
        payload = edit_payload(image_b64, polygon=[[0, 0], [5, 5]])
        assert client.post("/api/v1/edit", json=payload).status_code == 422

    def test_cfg_scale_bounds(self, client, image_b64):
        assert client.post("/api/v1/edit", json=edit_payload(image_b64, cfg_scale=20)).status_code == 422
        assert client.post("/api/v1/edit", json=edit_payload(image_b64, cfg_scale=-1)).status_code == 422

    def test_steps_bounds(self, client, image_b64):
        assert client.post("/api/v1/edit", json=edit_payload(image_b64, steps=0)).status_code == 422
        assert client.post("/api/v1/edit", json=edit_payload(image_b64, steps=500)).status_code == 422

    def test_bad_base64_names_field(self, client, image_b64):
        resp = client.post("/api/v1/edit", json=edit_payload("not-base64!!"))
        assert resp.status_code == 422
        assert resp.json()["detail"]["field"] == "image"

    def test_too_long_text_structured_error(self, client, image_b64):
        resp = client.post("/api/v1/edit", json=edit_payload(image_b64, text="x" * 30))
        assert resp.status_code == 422
        assert "error" in resp.json()["detail"]

    def test_edit_without_model_503(self, empty_client, image_b64):
        assert empty_client.post("/api/v1/edit", json=edit_payload(image_b64)).status_code == 503


class TestEdit:
    def test_well_formed_edit_roundtrip(self, client, image_b64):
        resp = client.post("/api/v1/edit", json=edit_payload(image_b64))
        assert resp.status_code == 200
        body = resp.json()
        out = Image.open(io.BytesIO(base64.b64decode(body["image"])))
        assert out.size == (128, 96)  # output dims equal input dims
        assert body["seed"] == 0
        assert set(body["timings"]) == {"prepare_ms", "sample_ms", "composite_ms"}

    def test_outside_region_pixels_unchanged(self, client, image_b64):
        resp = client.post("/api/v1/edit", json=edit_payload(image_b64))
        out = np.asarray(
            Image.open(io.BytesIO(base64.b64decode(resp.json()["image"]))).convert("RGB")
        )
        before = np.asarray(Image.open(io.BytesIO(base64.b64decode(image_b64))).convert("RGB"))
        region = np.zeros(before.shape[:2], dtype=bool)
        region[10:50, 10:80] = True
        assert np.array_equal(out[~region], before[~region])

    def test_mask_input(self, client, image_b64):
        mask = np.zeros((96, 128), dtype=np.uint8)
        mask[20:40, 30:90] = 255
        payload = edit_payload(image_b64, mask=png_b64(mask))
        del payload["polygon"]
        assert client.post("/api/v1/edit", json=payload).status_code == 200

    def test_deterministic_across_requests(self, client, image_b64):
        a = client.post("/api/v1/edit", json=edit_payload(image_b64)).json()["image"]
        b = client.post("/api/v1/edit", json=edit_payload(image_b64)).json()["image"]
        assert a == b

    def test_weights_stable_across_requests(self, client, small_model, image_b64):
        before = small_model.weight_checksum()
        for seed in range(5):
            resp = client.post("/api/v1/edit", json=edit_payload(image_b64, seed=seed))
            assert resp.status_code == 200
        assert small_model.weight_checksum() == before

    def test_queue_full_returns_429(self, client, small_model, image_b64):
        app = client.app
        app.state.pending = MAX_PENDING
        try:
            resp = client.post("/api/v1/edit", json=edit_payload(image_b64))
            assert resp.status_code == 429
        finally:
            app.state.pending = 0
        assert client.post("/api/v1/edit", json=edit_payload(image_b64)).status_code == 200


def test_cli_and_service_agree(client, small_model, image_b64, tmp_path):
    """The two surfaces share one edit path and must agree bit-for-bit."""
    from glyphedit.data import load_image
    from glyphedit.diffusion import SamplerConfig
    from glyphedit.editing import edit_image, image_to_png_array

    resp = client.post("/api/v1/edit", json=edit_payload(image_b64, seed=7))
    service_out = np.asarray(
        Image.open(io.BytesIO(base64.b64decode(resp.json()["image"]))).convert("RGB")
    )

    src = tmp_path / "in.png"
    Image.open(io.BytesIO(base64.b64decode(image_b64))).save(src)
    out, _ = edit_image(
        small_model,
        load_image(src),
        "hi",
        polygon=[(10.0, 10.0), (80.0, 10.0), (80.0, 50.0), (10.0, 50.0)],
        sampler=SamplerConfig(steps=1, cfg_scale=1.0, seed=7),
    )
    assert np.array_equal(service_out, image_to_png_array(out))
