import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from sketchfill.cli import main
from sketchfill.data import load_image, load_mask, save_mask
from sketchfill.masks import generate_freeform_mask
from sketchfill.ssa import SsaConfig, simulate_sketch

from conftest import make_toy_image, write_corpus


def dir_checksum(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*.png")):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_unknown_subcommand_exit_one(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_required_flag_exit_one(capsys):
    code = main(["infer", "--image", "a.png"])
    assert code == 1
    err = capsys.readouterr().err
    assert "--mask" in err or "mask" in err


def test_simulate_deterministic(tmp_path):
    manifest = write_corpus(tmp_path / "corpus", 3)
    for sub in ("a", "b"):
        code = main(
            ["simulate", "--manifest", str(manifest), "--out", str(tmp_path / sub), "--seed", "7"]
        )
        assert code == 0
    assert dir_checksum(tmp_path / "a") == dir_checksum(tmp_path / "b")
    with open(tmp_path / "a" / "manifest.json") as fh:
        produced = json.load(fh)
    assert len(produced) == 3
    assert {"image", "sketch", "edge", "mask"} <= set(produced[0])


def test_simulate_seed_changes_output(tmp_path):
    manifest = write_corpus(tmp_path / "corpus", 2)
    main(["simulate", "--manifest", str(manifest), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["simulate", "--manifest", str(manifest), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert dir_checksum(tmp_path / "a") != dir_checksum(tmp_path / "b")


def test_train_srn_and_refine_roundtrip(tmp_path, toy_corpus, tiny_srn_ckpt):
    img = make_toy_image(0)
    mask = generate_freeform_mask(64, 64, seed=0)
    sketch, _, _ = simulate_sketch(img, mask, SsaConfig(), seed=0)
    from sketchfill.data import save_image

    save_image(img, tmp_path / "img.png")
    save_mask(mask, tmp_path / "mask.png")
    save_mask(sketch, tmp_path / "sketch.png")
    code = main(
        [
            "refine",
            "--image", str(tmp_path / "img.png"),
            "--mask", str(tmp_path / "mask.png"),
            "--sketch", str(tmp_path / "sketch.png"),
            "--srn-ckpt", str(tiny_srn_ckpt),
            "--out", str(tmp_path / "refined.png"),
        ]
    )
    assert code == 0
    refined = load_mask(tmp_path / "refined.png")
    assert set(np.unique(refined.data)) <= {0.0, 1.0}
    # mask-region retention by default
    assert (refined.data * (1 - mask.data)).sum() == 0


def test_infer_happy_path(tmp_path, tiny_sin_ckpt):
    img = make_toy_image(1)
    mask = generate_freeform_mask(64, 64, seed=1)
    sketch, _, _ = simulate_sketch(img, mask, SsaConfig(), seed=1)
    from sketchfill.data import save_image

    save_image(img, tmp_path / "img.png")
    save_mask(mask, tmp_path / "mask.png")
    save_mask(sketch, tmp_path / "sketch.png")
    code = main(
        [
            "infer",
            "--image", str(tmp_path / "img.png"),
            "--mask", str(tmp_path / "mask.png"),
            "--sketch", str(tmp_path / "sketch.png"),
            "--sin-ckpt", str(tiny_sin_ckpt),
            "--out", str(tmp_path / "out.png"),
        ]
    )
    assert code == 0
    out = load_image(tmp_path / "out.png")
    assert out.data.shape == (64, 64, 3)


def test_infer_refine_requires_srn_ckpt(tmp_path, tiny_sin_ckpt):
    img = make_toy_image(1)
    mask = generate_freeform_mask(64, 64, seed=1)
    from sketchfill.data import save_image

    save_image(img, tmp_path / "img.png")
    save_mask(mask, tmp_path / "mask.png")
    code = main(
        [
            "infer",
            "--image", str(tmp_path / "img.png"),
            "--mask", str(tmp_path / "mask.png"),
            "--refine",
            "--sin-ckpt", str(tiny_sin_ckpt),
            "--out", str(tmp_path / "out.png"),
        ]
    )
    assert code == 1


def test_runtime_error_exit_two(tmp_path, tiny_sin_ckpt):
    # refiner loader rejects an inpainter checkpoint: runtime error, exit 2
    img = make_toy_image(0)
    mask = generate_freeform_mask(64, 64, seed=0)
    from sketchfill.data import save_image

    save_image(img, tmp_path / "img.png")
    save_mask(mask, tmp_path / "mask.png")
    save_mask(mask, tmp_path / "sketch.png")
    code = main(
        [
            "refine",
            "--image", str(tmp_path / "img.png"),
            "--mask", str(tmp_path / "mask.png"),
            "--sketch", str(tmp_path / "sketch.png"),
            "--srn-ckpt", str(tiny_sin_ckpt),
            "--out", str(tmp_path / "refined.png"),
        ]
    )
    assert code == 2


def test_eval_command(tmp_path, tiny_sin_ckpt, capsys):
    from sketchfill.data import save_image

    proto = tmp_path / "proto"
    proto.mkdir()
    entries = []
    for i in range(2):
        img = make_toy_image(i)
        mask = generate_freeform_mask(64, 64, seed=i)
        sketch, _, _ = simulate_sketch(img, mask, SsaConfig(), seed=i)
        save_image(img, proto / f"img{i}.png")
        save_mask(mask, proto / f"mask{i}.png")
        save_mask(sketch, proto / f"sketch{i}.png")
        entries.append({"image": f"img{i}.png", "mask": f"mask{i}.png", "sketch": f"sketch{i}.png"})
    (proto / "samples.json").write_text(json.dumps(entries))
    code = main(
        [
            "eval",
            "--protocol-dir", str(proto),
            "--sin-ckpt", str(tiny_sin_ckpt),
            "--out", str(tmp_path / "report"),
        ]
    )
    assert code == 0
    assert (tmp_path / "report" / "report.json").exists()
    out = capsys.readouterr().out
    assert '"count": 2' in out


def test_train_cli_requires_manifest(tmp_path):
    code = main(["train-srn", "--out", str(tmp_path / "run"), "--steps", "1"])
    assert code == 1
