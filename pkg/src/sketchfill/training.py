"""Optimization loops for both stages, with seeding, schedules, CSV logs,
checkpointing, and run-directory layout."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import SketchfillError
from .cc_loss import CcLossConfig, srn_losses
from .checkpoint import load_checkpoint, load_into_module, save_checkpoint
from .data import ImageTensor, load_image, load_manifest, save_image
from .gan_losses import (
    HrfFeatureNet,
    SinLossWeights,
    discriminator_adversarial_loss,
    gradient_penalty,
    sin_generator_loss,
)
from .masks import FreeformMaskParams, generate_freeform_mask
from .sin import PatchDiscriminator, SinConfig, SinModel
from .srn import SrnModel, _nchw
from .ssa import SsaConfig, simulate_sketch


@dataclass
class TrainConfig:
    stage: str = "srn"                      # "srn" | "sin"
    steps: int = 500
    batch_size: int = 4
    lr_generator: float = 1e-4
    lr_discriminator: float = 1e-4
    lr_halve_at: int | None = None          # defaults to steps // 2
    image_size: int = 64
    width_multiplier: float = 0.25
    seed: int = 0
    manifest: str = ""
    ssa: SsaConfig = field(default_factory=SsaConfig)
    cc: CcLossConfig = field(default_factory=CcLossConfig)
    lambda1: float = 0.4
    lambda2: float = 0.9
    sin_weights: SinLossWeights = field(default_factory=SinLossWeights)
    sin_taps: int = 4
    gp_weight: float = 10.0
    checkpoint_every: int = 0               # 0 = only final
    sample_every: int = 0
    log_every: int = 10
    srn_checkpoint: str | None = None       # train SIN on refined sketches

    def __post_init__(self):
        if self.stage not in ("srn", "sin"):
            raise ValueError("stage must be 'srn' or 'sin'")
        if self.steps <= 0:
            raise ValueError("steps must be positive")
        if self.image_size % 8 != 0 or self.image_size < 16:
            raise ValueError("image_size must be >= 16 and divisible by 8")
        if self.lr_generator <= 0 or self.lr_discriminator <= 0:
            raise ValueError("learning rates must be positive")
        if self.lr_halve_at is None:
            self.lr_halve_at = self.steps // 2


def config_from_file(path: str | Path) -> TrainConfig:
    """Parse a TOML or JSON config file into a TrainConfig."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text.decode())
    else:
        raw = json.loads(text)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> TrainConfig:
    nested = {
        "ssa": SsaConfig,
        "cc": CcLossConfig,
        "sin_weights": SinLossWeights,
    }
    kwargs = {}
    for key, value in raw.items():
        if key in nested and isinstance(value, dict):
            kwargs[key] = nested[key](**value)
        else:
            kwargs[key] = value
    return TrainConfig(**kwargs)


def _serializable(config: TrainConfig) -> dict:
    return json.loads(json.dumps(asdict(config), default=str))


class RunDirectory:
    """On-disk layout: config snapshot, checkpoints/, logs.csv, samples/."""

    def __init__(self, root: str | Path, config: TrainConfig):
        self.root = Path(root)
        (self.root / "checkpoints").mkdir(parents=True, exist_ok=True)
        (self.root / "samples").mkdir(exist_ok=True)
        with open(self.root / "config.json", "w") as fh:
            json.dump(_serializable(config), fh, indent=2)
        self._log_path = self.root / "logs.csv"
        self._log_fields: list[str] | None = None

    def log(self, step: int, scalars: dict[str, float]) -> None:
        row = {"step": step, **scalars}
        new = self._log_fields is None
        if new:
            self._log_fields = list(row)
        with open(self._log_path, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self._log_fields)
            if new:
                writer.writeheader()
            writer.writerow(row)

    def checkpoint_path(self, step: int) -> Path:
        return self.root / "checkpoints" / f"step-{step:06d}.ckpt"


class _Corpus:
    """Deterministic in-memory dataset of resized training images."""

    def __init__(self, manifest_path: str, image_size: int):
        records = load_manifest(manifest_path)
        if not records:
            raise SketchfillError(f"manifest {manifest_path} lists no images")
        self.images = [load_image(r.image, image_size) for r in records]
        self.paths = [r.image for r in records]

    def batch(self, rng: np.random.Generator, size: int) -> list[int]:
        return [int(i) for i in rng.integers(0, len(self.images), size)]


def _prepare_batch(
    corpus: _Corpus,
    indices: list[int],
    config: TrainConfig,
    rng: np.random.Generator,
    mask_params: FreeformMaskParams,
):
    """Masks + simulated sketches for one batch; psi shared across the batch."""
    size = config.image_size
    psi = float(rng.uniform(config.ssa.psi_min, config.ssa.psi_max))
    images, masks, sketches, edges = [], [], [], []
    for idx in indices:
        img = corpus.images[idx]
        mask = generate_freeform_mask(size, size, int(rng.integers(0, 2**31 - 1)), mask_params)
        sketch, edge, _ = simulate_sketch(
            img, mask, config.ssa, int(rng.integers(0, 2**31 - 1)), psi=psi
        )
        images.append(img)
        masks.append(mask)
        sketches.append(sketch)
        edges.append(edge)
    return images, masks, sketches, edges


def _stack_nchw(arrays, channels_last=False):
    return torch.cat([_nchw(a) for a in arrays], dim=0)


def _abort_on_nan(loss: torch.Tensor, step: int, run: RunDirectory, batch_info: dict):
    if not torch.isfinite(loss):
        dump = run.root / f"nan-batch-step{step}.json"
        with open(dump, "w") as fh:
            json.dump(batch_info, fh)
        raise SketchfillError(
            f"non-finite loss at step {step}; offending batch dumped to {dump}"
        )


def train_srn(config: TrainConfig, run_dir: str | Path) -> Path:
    """Train the refiner; both stage losses backpropagate jointly each step.

    Returns the final checkpoint path.
    """
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    corpus = _Corpus(config.manifest, config.image_size)
    run = RunDirectory(run_dir, config)
    model = SrnModel(config.width_multiplier)
    optim = torch.optim.Adam(model.parameters(), lr=config.lr_generator, betas=(0.9, 0.999))
    mask_params = FreeformMaskParams()

    model.train()
    for step in range(config.steps):
        _maybe_halve_lr(optim, step, config)
        indices = corpus.batch(rng, config.batch_size)
        images, masks, sketches, edges = _prepare_batch(corpus, indices, config, rng, mask_params)
        img_t = _stack_nchw([im.data for im in images])
        mask_t = _stack_nchw([m.data for m in masks])
        sketch_t = _stack_nchw([s.data for s in sketches])
        edge_t = _stack_nchw([e.data for e in edges])
        masked = img_t * (1.0 - mask_t)

        s_coarse, s_hat = model(masked, mask_t, sketch_t)
        loss_rm, loss_em = srn_losses(
            s_coarse, s_hat, edge_t, config.lambda1, config.lambda2, config.cc
        )
        loss = loss_rm + loss_em
        _abort_on_nan(loss, step, run, {"indices": indices})
        optim.zero_grad()
        loss.backward()
        optim.step()

        if step % config.log_every == 0 or step == config.steps - 1:
            run.log(
                step,
                {
                    "loss": float(loss.detach()),
                    "loss_rm": float(loss_rm.detach()),
                    "loss_em": float(loss_em.detach()),
                    "l1": float(F.l1_loss(s_hat.detach(), edge_t)),
                },
            )
        if config.checkpoint_every and step and step % config.checkpoint_every == 0:
            _save_srn(model, optim, config, step, run.checkpoint_path(step))

    final = run.checkpoint_path(config.steps)
    _save_srn(model, optim, config, config.steps, final)
    return final


def _maybe_halve_lr(optim, step, config):
    if step == config.lr_halve_at and step > 0:
        for group in optim.param_groups:
            group["lr"] = group["lr"] / 2.0


def _optim_arrays(optim: torch.optim.Optimizer) -> dict:
    arrays = {}
    state = optim.state_dict()["state"]
    for pid, entry in state.items():
        for key, value in entry.items():
            if isinstance(value, torch.Tensor):
                arrays[f"{pid}/{key}"] = value
            else:
                arrays[f"{pid}/{key}"] = torch.tensor(float(value))
    return arrays


def _save_srn(model, optim, config, step, path):
    save_checkpoint(
        {"srn": model.state_dict(), "optim": _optim_arrays(optim)},
        path,
        meta={
            "stage": "srn",
            "step": step,
            "config": _serializable(config),
            "width_multiplier": config.width_multiplier,
        },
    )


def load_srn(path: str | Path) -> tuple[SrnModel, dict]:
    flat, meta = load_checkpoint(path)
    if meta.get("stage") != "srn":
        raise SketchfillError(f"{path} is not a refiner checkpoint (stage={meta.get('stage')})")
    model = SrnModel(meta.get("width_multiplier", 1.0))
    load_into_module(model, flat, "srn")
    model.eval()
    return model, meta


def train_sin(config: TrainConfig, run_dir: str | Path) -> Path:
    """Adversarial training of the inpainting stage, 1:1 G/D alternation."""
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    corpus = _Corpus(config.manifest, config.image_size)
    run = RunDirectory(run_dir, config)

    sin_config = SinConfig(width_multiplier=config.width_multiplier, taps=config.sin_taps)
    model = SinModel(sin_config)
    disc = PatchDiscriminator(config.width_multiplier)
    hrf_net = HrfFeatureNet(seed=config.seed)
    opt_g = torch.optim.Adam(model.parameters(), lr=config.lr_generator, betas=(0.9, 0.999))
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.lr_discriminator, betas=(0.9, 0.999))
    mask_params = FreeformMaskParams()

    refiner = None
    if config.srn_checkpoint:
        refiner, _ = load_srn(config.srn_checkpoint)

    model.train()
    disc.train()
    for step in range(config.steps):
        _maybe_halve_lr(opt_g, step, config)
        _maybe_halve_lr(opt_d, step, config)
        indices = corpus.batch(rng, config.batch_size)
        images, masks, sketches, edges = _prepare_batch(corpus, indices, config, rng, mask_params)
        if refiner is not None:
            from .srn import refine_sketch

            sketches = [
                refine_sketch(im, m, s, refiner, retain_valid=True)
                for im, m, s in zip(images, masks, sketches)
            ]
            model.train()
        img_t = _stack_nchw([im.data for im in images])
        mask_t = _stack_nchw([m.data for m in masks])
        sketch_t = _stack_nchw([s.data for s in sketches])
        masked = img_t * (1.0 - mask_t)

        # discriminator step
        with torch.no_grad():
            fake = model(masked, mask_t, sketch_t)
        d_loss = discriminator_adversarial_loss(disc(img_t), disc(fake))
        gp = gradient_penalty(disc, img_t)
        d_total = d_loss + config.gp_weight * gp
        _abort_on_nan(d_total, step, run, {"indices": indices, "side": "disc"})
        opt_d.zero_grad()
        d_total.backward()
        opt_d.step()

        # generator step
        pred = model(masked, mask_t, sketch_t)
        g_total, terms = sin_generator_loss(pred, img_t, disc, hrf_net, config.sin_weights)
        _abort_on_nan(g_total, step, run, {"indices": indices, "side": "gen"})
        opt_g.zero_grad()
        g_total.backward()
        opt_g.step()

        if step % config.log_every == 0 or step == config.steps - 1:
            run.log(
                step,
                {
                    "g_total": terms["total"],
                    "g_l1": terms["l1"],
                    "g_adv": terms["adv"],
                    "g_fm": terms["fm"],
                    "g_hrf": terms["hrf"],
                    "d_loss": float(d_loss.detach()),
                    "d_gp": float(gp.detach()),
                },
            )
        if config.sample_every and step % config.sample_every == 0:
            _save_sample_grid(run, step, img_t, masked, pred.detach(), mask_t)
        if config.checkpoint_every and step and step % config.checkpoint_every == 0:
            _save_sin(model, disc, opt_g, opt_d, config, step, run.checkpoint_path(step))

    final = run.checkpoint_path(config.steps)
    _save_sin(model, disc, opt_g, opt_d, config, config.steps, final)
    return final


def _save_sample_grid(run, step, real, masked, pred, mask):
    rows = []
    for i in range(min(4, real.shape[0])):
        row = torch.cat([real[i], masked[i], pred[i]], dim=2)
        rows.append(row)
    grid = torch.cat(rows, dim=1).permute(1, 2, 0).numpy()
    img = ImageTensor(np.clip(grid, -1, 1), "unit_signed")
    save_image(img, run.root / "samples" / f"step-{step:06d}.png")


def _save_sin(model, disc, opt_g, opt_d, config, step, path):
    save_checkpoint(
        {
            "sin": model.state_dict(),
            "disc": disc.state_dict(),
            "opt_g": _optim_arrays(opt_g),
            "opt_d": _optim_arrays(opt_d),
        },
        path,
        meta={
            "stage": "sin",
            "step": step,
            "config": _serializable(config),
            "width_multiplier": config.width_multiplier,
            "taps": config.sin_taps,
        },
    )


def load_sin(path: str | Path) -> tuple[SinModel, dict]:
    flat, meta = load_checkpoint(path)
    if meta.get("stage") != "sin":
        raise SketchfillError(f"{path} is not an inpainter checkpoint (stage={meta.get('stage')})")
    model = SinModel(
        SinConfig(width_multiplier=meta.get("width_multiplier", 1.0), taps=meta.get("taps", 4))
    )
    load_into_module(model, flat, "sin")
    model.eval()
    return model, meta
