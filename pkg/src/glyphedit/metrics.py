"""Evaluation: sentence accuracy, character error rate, FID, LPIPS.

Text metrics compare predicted and target strings directly, so they are
independent of any particular recognizer. Image metrics run on cropped
text regions through a pluggable feature embedder; the default embedder
reuses the frozen OCR stub so no external weights are needed (standard
Inception/AlexNet embedders can be plugged in behind the same interface
for parity with published numbers).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import torch

from . import _kernels
from .errors import EmptyInputError, MissingFileError, SchemaError, TooFewSamplesError
from .geometry import Polygon, crop_bbox, resize_image
from .glyph_render import GLOBAL_H, GLOBAL_W
from .ocr_encoder import StubOcrEncoder

CROP_SIZE = 128


def normalize_metric_text(s: str) -> str:
    """Whitespace-stripped, case-sensitive comparison form."""
    return s.strip()


@dataclass
class EvalPair:
    generated_crop: torch.Tensor  # (3, 128, 128)
    reference_crop: torch.Tensor  # (3, 128, 128)
    predicted_text: str
    target_text: str


@dataclass
class MetricsReport:
    sen_acc: float
    cer: float
    fid: float
    avg_lpips: float
    n_pairs: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def format_table(self) -> str:
        header = f"{'Sen.Acc ↑':>12} {'CER ↓':>10} {'FID ↓':>10} {'Avg.LPIPS ↓':>12}"
        row = f"{self.sen_acc:>12.4f} {self.cer:>10.4f} {self.fid:>10.4f} {self.avg_lpips:>12.4f}"
        return header + "\n" + row


def sentence_accuracy(pairs: list) -> float:
    """Fraction of pairs whose texts match exactly after normalization."""
    if not pairs:
        raise EmptyInputError("no pairs")
    hits = sum(
        1
        for p in pairs
        if normalize_metric_text(p.predicted_text) == normalize_metric_text(p.target_text)
    )
    return hits / len(pairs)


def cer(pred: str, gt: str) -> float:
    """Levenshtein distance divided by the ground-truth length."""
    gt = normalize_metric_text(gt)
    if not gt:
        raise EmptyInputError("ground truth is empty")
    return _kernels.levenshtein(normalize_metric_text(pred), gt) / len(gt)


def mean_cer(pairs: list) -> float:
    if not pairs:
        raise EmptyInputError("no pairs")
    return sum(cer(p.predicted_text, p.target_text) for p in pairs) / len(pairs)


class FeatureEmbedder:
    """Interface: map a list of (3, H, W) crops to an (n, d) array."""

    def embed(self, images: list[torch.Tensor]) -> np.ndarray:
        raise NotImplementedError


class StubBackboneEmbedder(FeatureEmbedder):
    """Pooled last-level feature of the frozen OCR stub; also exposes the
    multi-level maps used by the perceptual distance."""

    def __init__(self, seed: int = 0):
        self.encoder = StubOcrEncoder(seed=seed)

    @staticmethod
    def _to_input(image: torch.Tensor) -> torch.Tensor:
        gray = image.mean(dim=0, keepdim=True)  # (1, H, W)
        return resize_image(gray, GLOBAL_H, GLOBAL_W)[0]

    def embed(self, images: list[torch.Tensor]) -> np.ndarray:
        out = []
        for img in images:
            feats = self.encoder.encode(self._to_input(img))
            pooled = feats.backbone.levels[-1].mean(dim=(1, 2))  # (256,)
            out.append(pooled.numpy())
        return np.stack(out)

    def level_maps(self, image: torch.Tensor) -> list[torch.Tensor]:
        return self.encoder.encode(self._to_input(image)).backbone.levels


def frechet_distance(feats_a: np.ndarray, feats_b: np.ndarray, eps: float = 1e-6) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2})."""
    if feats_a.shape[0] < 2 or feats_b.shape[0] < 2:
        raise TooFewSamplesError("need at least 2 samples per set")
    mu_a, mu_b = feats_a.mean(axis=0), feats_b.mean(axis=0)
    cov_a = np.cov(feats_a, rowvar=False) + eps * np.eye(feats_a.shape[1])
    cov_b = np.cov(feats_b, rowvar=False) + eps * np.eye(feats_b.shape[1])
    covmean, _ = scipy.linalg.sqrtm(cov_a @ cov_b, disp=False)
    if not np.isfinite(covmean).all():
        raise TooFewSamplesError("covariance square root failed")
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu_a - mu_b
    val = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2 * np.trace(covmean))
    return max(val, 0.0)


def fid(
    set_a: list[torch.Tensor],
    set_b: list[torch.Tensor],
    embedder: FeatureEmbedder | None = None,
) -> float:
    embedder = embedder or StubBackboneEmbedder()
    return frechet_distance(embedder.embed(set_a), embedder.embed(set_b))


def lpips_distance(
    a: torch.Tensor, b: torch.Tensor, embedder: StubBackboneEmbedder
) -> float:
    """Normalized multi-level feature distance, averaged over levels."""
    total = 0.0
    la, lb = embedder.level_maps(a), embedder.level_maps(b)
    for fa, fb in zip(la, lb):
        na = fa / (fa.norm(dim=0, keepdim=True) + 1e-10)
        nb = fb / (fb.norm(dim=0, keepdim=True) + 1e-10)
        total += float(((na - nb) ** 2).mean())
    return total / len(la)


def avg_lpips(pairs: list, embedder: StubBackboneEmbedder | None = None) -> float:
    if not pairs:
        raise EmptyInputError("no pairs")
    embedder = embedder or StubBackboneEmbedder()
    return sum(
        lpips_distance(p.generated_crop, p.reference_crop, embedder) for p in pairs
    ) / len(pairs)


def crop_regions(image: torch.Tensor, polygon: Polygon, size: int = CROP_SIZE) -> torch.Tensor:
    """Bounding-box crop of the region resized to the metric input size."""
    return resize_image(crop_bbox(image, polygon), size, size)


def compute_report(pairs: list[EvalPair], embedder: StubBackboneEmbedder | None = None) -> MetricsReport:
    if not pairs:
        raise EmptyInputError("no pairs")
    embedder = embedder or StubBackboneEmbedder()
    return MetricsReport(
        sen_acc=sentence_accuracy(pairs),
        cer=mean_cer(pairs),
        fid=fid([p.generated_crop for p in pairs], [p.reference_crop for p in pairs], embedder),
        avg_lpips=avg_lpips(pairs, embedder),
        n_pairs=len(pairs),
    )


def _load_triples(directory: Path) -> list[dict]:
    sidecar = directory / "labels.jsonl"
    if not sidecar.exists():
        raise MissingFileError(f"missing sidecar: {sidecar}")
    out = []
    with sidecar.open() as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            obj = json.loads(line)
            for key in ("image", "polygon", "text"):
                if key not in obj:
                    raise SchemaError(f"{sidecar} record {i}: missing '{key}'")
            out.append(obj)
    return out


def evaluate_directories(pred_dir: str | Path, gt_dir: str | Path) -> MetricsReport:
    """Pair up two (image, polygon, text) directories by record order."""
    from .data import load_image

    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    preds, gts = _load_triples(pred_dir), _load_triples(gt_dir)
    if len(preds) != len(gts):
        raise SchemaError(f"record counts differ: {len(preds)} vs {len(gts)}")
    pairs = []
    for p, g in zip(preds, gts):
        gen = load_image(pred_dir / p["image"])
        ref = load_image(gt_dir / g["image"])
        pairs.append(
            EvalPair(
                generated_crop=crop_regions(gen, [tuple(pt) for pt in p["polygon"]]),
                reference_crop=crop_regions(ref, [tuple(pt) for pt in g["polygon"]]),
                predicted_text=p["text"],
                target_text=g["text"],
            )
        )
    return compute_report(pairs)
