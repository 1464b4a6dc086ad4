"""Command line entry points: train, edit, eval, serve, render-glyphs."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from .config import load_config
from .diffusion import SamplerConfig
from .errors import GlyphEditError

log = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _fail(e: Exception) -> None:
    click.echo(f"error: {e}", err=True)
    sys.exit(1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", default="runs/train", type=click.Path())
@click.option("--resume", default=None, type=click.Path())
def train(config_path: str, out_dir: str, resume: str | None):
    """Train the editing model per a run config."""
    from .training import train as run_train

    try:
        cfg = load_config(config_path)
        ckpt = run_train(cfg, out_dir, resume=resume)
    except GlyphEditError as e:
        _fail(e)
    click.echo(f"checkpoint written to {ckpt}")


@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--image", "image_path", required=True, type=click.Path())
@click.option("--polygon", "polygon_json", default=None, help="JSON [[x,y],...]")
@click.option("--mask", "mask_path", default=None, type=click.Path())
@click.option("--text", required=True)
@click.option("--cfg", "cfg_scale", default=3.0, type=float)
@click.option("--steps", default=20, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def edit(checkpoint, image_path, polygon_json, mask_path, text, cfg_scale, steps, seed, out_path):
    """Replace the text in one region of one image."""
    from .data import load_image
    from .editing import edit_image, load_mask_png, save_png
    from .model import load_checkpoint

    try:
        model, _ = load_checkpoint(checkpoint)
        image = load_image(Path(image_path))
        polygon = None
        mask = None
        if polygon_json is not None:
            polygon = [(float(p[0]), float(p[1])) for p in json.loads(polygon_json)]
        if mask_path is not None:
            mask = (load_mask_png(mask_path) > 0.5).float()
        sampler = SamplerConfig(steps=steps, cfg_scale=cfg_scale, seed=seed)
        out, timings = edit_image(model, image, text, polygon=polygon, mask=mask, sampler=sampler)
        save_png(out, out_path)
    except GlyphEditError as e:
        _fail(e)
    for stage, ms in timings.items():
        click.echo(f"{stage}: {ms:.1f} ms")
    click.echo(f"wrote {out_path}")


@main.command("eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path())
@click.option("--gt", "gt_dir", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_cmd(pred_dir, gt_dir, out_path):
    """Compare two directories of (image, polygon, text) triples."""
    from .metrics import evaluate_directories

    try:
        report = evaluate_directories(pred_dir, gt_dir)
    except GlyphEditError as e:
        _fail(e)
    click.echo(report.format_table())
    if out_path:
        Path(out_path).write_text(report.to_json())
        click.echo(f"wrote {out_path}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--checkpoint", default=None, type=click.Path())
@click.option("--port", default=8000, type=int)
def serve(config_path, checkpoint, port):
    """Run the HTTP inference service."""
    import uvicorn

    from .model import EditorModel, load_checkpoint
    from .service import create_app

    try:
        if checkpoint is not None:
            model, _ = load_checkpoint(checkpoint)
        elif config_path is not None:
            cfg = load_config(config_path)
            if cfg.checkpoint:
                model, _ = load_checkpoint(cfg.checkpoint)
            else:
                model = EditorModel(cfg)
        else:
            model = EditorModel()
    except GlyphEditError as e:
        _fail(e)
    uvicorn.run(create_app(model), host="127.0.0.1", port=port)


@main.command("render-glyphs")
@click.option("--text", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--font", "font_path", default=None, type=click.Path())
def render_glyphs_cmd(text, out_dir, font_path):
    """Debug: dump the glyph images for a prompt as 8-bit PNGs."""
    from .glyph_render import FontSpec, TextLine, render_glyphs

    try:
        glyphs = render_glyphs(TextLine(text), FontSpec(font_path))
    except GlyphEditError as e:
        _fail(e)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, sl in enumerate(glyphs.local):
        Image.fromarray((sl * 255).astype(np.uint8)).save(out / f"local_{i:02d}.png")
    Image.fromarray((glyphs.global_ * 255).astype(np.uint8)).save(out / "global.png")
    click.echo(f"wrote {len(glyphs.local)} local slices + global.png to {out}")


if __name__ == "__main__":
    main()
