"""Command-line entry points: simulate | train-srn | train-sin | refine |
infer | eval | serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import SketchfillError
from .data import load_image, load_manifest, load_mask, save_image, save_mask
from .masks import generate_freeform_mask
from .protocol import run_protocol
from .sin import inpaint
from .srn import refine_sketch
from .ssa import SsaConfig, simulate_sketch
from .training import (
    TrainConfig,
    config_from_file,
    load_sin,
    load_srn,
    train_sin,
    train_srn,
)


@click.group()
def cli():
    """Sketch-guided interactive inpainting toolkit."""


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--size", default=64, type=int, help="Square output resolution.")
@click.option("--kernel-size", default=11, type=int)
@click.option("--psi-min", default=0.01, type=float)
@click.option("--psi-max", default=0.8, type=float)
def simulate(manifest, out_dir, seed, size, kernel_size, psi_min, psi_max):
    """Write per-sample (sketch, edge, mask) PNG triples plus a manifest."""
    config = SsaConfig(kernel_size=kernel_size, psi_min=psi_min, psi_max=psi_max, seed=seed)
    records = load_manifest(manifest)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced = []
    for i, rec in enumerate(records):
        image = load_image(rec.image, size)
        mask = (
            load_mask(rec.mask)
            if rec.mask
            else generate_freeform_mask(size, size, seed + i)
        )
        sketch, edge, _ = simulate_sketch(image, mask, config, seed + i, source_path=rec.image)
        stem = Path(rec.image).stem
        save_mask(sketch, out / f"{stem}.sketch.png")
        save_mask(edge, out / f"{stem}.edge.png")
        save_mask(mask, out / f"{stem}.mask.png")
        produced.append(
            {
                "image": rec.image,
                "sketch": f"{stem}.sketch.png",
                "edge": f"{stem}.edge.png",
                "mask": f"{stem}.mask.png",
            }
        )
    with open(out / "manifest.json", "w") as fh:
        json.dump(produced, fh, indent=2)
    click.echo(f"simulated {len(produced)} samples into {out}")


def _train_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True))(fn)
    fn = click.option("--manifest", type=click.Path(exists=True))(fn)
    fn = click.option("--out", "run_dir", required=True, type=click.Path())(fn)
    fn = click.option("--steps", type=int)(fn)
    fn = click.option("--size", type=int)(fn)
    fn = click.option("--width", type=float)(fn)
    fn = click.option("--batch-size", type=int)(fn)
    fn = click.option("--seed", type=int)(fn)
    fn = click.option("--lr", type=float)(fn)
    return fn


def _build_config(stage, config_path, manifest, steps, size, width, batch_size, seed, lr):
    if config_path:
        config = config_from_file(config_path)
        config.stage = stage
    else:
        config = TrainConfig(stage=stage)
    if manifest:
        config.manifest = manifest
    if steps:
        config.steps = steps
    if size:
        config.image_size = size
    if width:
        config.width_multiplier = width
    if batch_size:
        config.batch_size = batch_size
    if seed is not None:
        config.seed = seed
    if lr:
        config.lr_generator = lr
    if not config.manifest:
        raise click.UsageError("either --manifest or a config file with one is required")
    return config


@cli.command("train-srn")
@_train_options
def train_srn_cmd(config_path, manifest, run_dir, steps, size, width, batch_size, seed, lr):
    """Train the sketch refiner."""
    config = _build_config("srn", config_path, manifest, steps, size, width, batch_size, seed, lr)
    ckpt = train_srn(config, run_dir)
    click.echo(f"final checkpoint: {ckpt}")


@cli.command("train-sin")
@_train_options
@click.option("--use-srn", "srn_ckpt", type=click.Path(exists=True), default=None)
@click.option("--taps", type=int, default=None)
def train_sin_cmd(
    config_path, manifest, run_dir, steps, size, width, batch_size, seed, lr, srn_ckpt, taps
):
    """Train the inpainting stage."""
    config = _build_config("sin", config_path, manifest, steps, size, width, batch_size, seed, lr)
    if srn_ckpt:
        config.srn_checkpoint = srn_ckpt
    if taps:
        config.sin_taps = taps
    ckpt = train_sin(config, run_dir)
    click.echo(f"final checkpoint: {ckpt}")


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--sketch", "sketch_path", required=True, type=click.Path(exists=True))
@click.option("--srn-ckpt", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--retain-valid/--no-retain-valid", default=False)
def refine(image_path, mask_path, sketch_path, srn_ckpt, out_path, retain_valid):
    """Refine a free-form sketch toward edge-like guidance."""
    model, meta = load_srn(srn_ckpt)
    size = meta.get("config", {}).get("image_size", 64)
    image = load_image(image_path, size)
    refined = refine_sketch(
        image, load_mask(mask_path), load_mask(sketch_path), model, retain_valid
    )
    save_mask(refined, out_path)
    click.echo(f"wrote {out_path}")


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--sketch", "sketch_path", type=click.Path(exists=True), default=None)
@click.option("--refine/--no-refine", "do_refine", default=False)
@click.option("--srn-ckpt", type=click.Path(exists=True), default=None)
@click.option("--sin-ckpt", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def infer(image_path, mask_path, sketch_path, do_refine, srn_ckpt, sin_ckpt, out_path):
    """Inpaint an image, optionally refining the sketch first."""
    sin_model, meta = load_sin(sin_ckpt)
    size = meta.get("config", {}).get("image_size", 64)
    srn_model = None
    if do_refine:
        if not srn_ckpt:
            raise click.UsageError("--refine requires --srn-ckpt")
        srn_model, _ = load_srn(srn_ckpt)
    image = load_image(image_path, size)
    mask = load_mask(mask_path)
    sketch = load_mask(sketch_path) if sketch_path else None
    result = inpaint(image, mask, sketch, sin_model, srn_model, refine=do_refine)
    save_image(result, out_path)
    click.echo(f"wrote {out_path}")


@cli.command("eval")
@click.option("--protocol-dir", required=True, type=click.Path(exists=True))
@click.option("--sin-ckpt", required=True, type=click.Path(exists=True))
@click.option("--srn-ckpt", type=click.Path(exists=True), default=None)
@click.option("--refine/--no-refine", "do_refine", default=False)
@click.option("--out", "out_dir", required=True, type=click.Path())
def eval_cmd(protocol_dir, sin_ckpt, srn_ckpt, do_refine, out_dir):
    """Run the sketch-based test protocol and write a metric report."""
    sin_model, meta = load_sin(sin_ckpt)
    size = meta.get("config", {}).get("image_size", 64)
    srn_model, _ = load_srn(srn_ckpt) if srn_ckpt else (None, None)
    report = run_protocol(
        protocol_dir, sin_model, srn_model, refine=do_refine, image_size=size, out_dir=out_dir
    )
    click.echo(json.dumps(report.aggregate, indent=2))


@cli.command()
@click.option("--srn-ckpt", envvar="SKF_SRN_CKPT", type=click.Path(exists=True), default=None)
@click.option("--sin-ckpt", envvar="SKF_SIN_CKPT", required=True, type=click.Path(exists=True))
@click.option("--port", envvar="SKF_PORT", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
def serve(srn_ckpt, sin_ckpt, port, host):
    """Run the HTTP inference service."""
    from .server import serve as run_server

    run_server(srn_ckpt, sin_ckpt, port=port, host=host)


def main(argv=None) -> int:
    """Dispatch with the documented exit codes: 0 ok, 1 usage, 2 runtime."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_help(), err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except SketchfillError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
