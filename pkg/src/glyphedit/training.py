"""Training loop: denoising objective, loss log, checkpointing, resume."""

from __future__ import annotations

import csv
import logging
from itertools import islice
from pathlib import Path

import torch

from .config import RunConfig
from .data import TextRegionSample, sample_stream
from .errors import ConfigError
from .model import EditorModel, load_checkpoint, save_checkpoint

log = logging.getLogger(__name__)


def train_steps(
    model: EditorModel,
    batches,
    steps: int,
    lr: float,
    rng: torch.Generator,
    null_prob: float = 0.1,
    on_step=None,
) -> list[float]:
    """Run `steps` optimizer steps over an iterator of encoded batches."""
    opt = torch.optim.Adam(model.trainable_parameters(), lr=lr)
    losses = []
    for step in range(steps):
        batch = next(batches)
        loss = model.training_loss(batch, rng, null_prob=null_prob)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
        if on_step is not None:
            on_step(step, losses[-1])
    return losses


def overfit(
    model: EditorModel,
    samples: list[TextRegionSample],
    steps: int,
    lr: float = 1e-4,
    seed: int = 0,
    null_prob: float = 0.1,
    batch_size: int | None = None,
) -> list[float]:
    """Train on a fixed sample set; frozen encodings are cached once.

    With `batch_size` set, each optimizer step sees a round-robin slice
    of the sample set instead of the full batch.
    """
    encoded = [(s, model.encode_sample(s, with_clean=True)) for s in samples]

    def batches():
        if batch_size is None:
            while True:
                yield encoded
        else:
            i = 0
            while True:
                window = [encoded[(i + k) % len(encoded)] for k in range(batch_size)]
                i = (i + batch_size) % len(encoded)
                yield window

    rng = torch.Generator().manual_seed(seed)
    return train_steps(model, batches(), steps, lr, rng, null_prob=null_prob)


def probe_loss(model: EditorModel, samples: list[TextRegionSample], seed: int = 1234) -> float:
    """Deterministic loss estimate: fixed rng, no null-condition dropout."""
    encoded = [(s, model.encode_sample(s, with_clean=True)) for s in samples]
    rng = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        return float(model.training_loss(encoded, rng, null_prob=0.0))


def train(
    config: RunConfig, out_dir: str | Path, resume: str | Path | None = None
) -> Path:
    """Full training run driven by a RunConfig; returns the checkpoint path.

    Writes `loss_log.csv` (step, loss) and periodic checkpoints under
    `out_dir`.
    """
    if config.data.manifest is None:
        raise ConfigError("training requires data.manifest")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.pt"
    log_path = out_dir / "loss_log.csv"

    if resume is not None:
        model, start_step = load_checkpoint(resume)
        log.info("resumed from %s at step %d", resume, start_step)
    else:
        model, start_step = EditorModel(config), 0

    tcfg = config.training
    stream = sample_stream(config.data.manifest, seed=tcfg.seed)
    # skip the samples already consumed so a resumed run continues the stream
    consumed = start_step * tcfg.batch_size
    next(islice(stream, consumed, consumed), None)

    def batches():
        while True:
            raw = list(islice(stream, tcfg.batch_size))
            yield [(s, model.encode_sample(s, with_clean=True)) for s in raw]

    rng = torch.Generator().manual_seed(tcfg.seed + start_step)
    mode = "a" if resume is not None and log_path.exists() else "w"
    with log_path.open(mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(["step", "loss"])

        def on_step(step: int, loss: float):
            global_step = start_step + step + 1
            writer.writerow([global_step, f"{loss:.6f}"])
            fh.flush()
            if global_step % tcfg.checkpoint_every == 0 or global_step == start_step + tcfg.steps:
                save_checkpoint(model, ckpt_path, step=global_step)
            if global_step % 10 == 0:
                log.info("step %d loss %.4f", global_step, loss)

        train_steps(
            model,
            batches(),
            tcfg.steps,
            tcfg.lr,
            rng,
            null_prob=tcfg.null_condition_prob,
            on_step=on_step,
        )
    if not ckpt_path.exists():
        save_checkpoint(model, ckpt_path, step=start_step + tcfg.steps)
    return ckpt_path
