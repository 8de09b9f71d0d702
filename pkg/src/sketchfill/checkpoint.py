"""Deterministic checkpoint container: JSON header + raw array payload.

Layout:
    magic (8 bytes) | header length (uint32 LE) | header JSON (utf-8) | payload

The header records the format version, a config snapshot, a per-array index
(name, shape, dtype, byte offset/length), and a SHA-256 of the payload, so a
save -> load -> save round trip is byte-identical and truncation is detected.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from . import CheckpointError

MAGIC = b"SKFCKPT\x00"
FORMAT_VERSION = 1


def _flatten_state(state: dict, prefix: str = "") -> dict[str, np.ndarray]:
    """Flatten a (possibly nested) state dict of tensors/arrays/scalars."""
    flat = {}
    for key, value in state.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten_state(value, name + "/"))
        elif isinstance(value, torch.Tensor):
            flat[name] = value.detach().cpu().numpy()
        elif isinstance(value, (int, float)):
            flat[name] = np.asarray(value)
        elif isinstance(value, np.ndarray):
            flat[name] = value
        else:
            raise CheckpointError(f"cannot serialize entry {name!r} of type {type(value)}")
    return flat


def save_checkpoint(arrays: dict, path: str | Path, meta: dict | None = None) -> None:
    """Write arrays (nested dicts of tensors allowed) plus JSON metadata."""
    flat = _flatten_state(arrays)
    index = []
    chunks = []
    offset = 0
    for name in sorted(flat):
        arr = flat[name]
        # ascontiguousarray promotes 0-dim to (1,), so record the shape first
        raw = np.ascontiguousarray(arr).tobytes()
        index.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": str(arr.dtype),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {
        "version": FORMAT_VERSION,
        "meta": meta or {},
        "arrays": index,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read back (flat arrays, metadata); verifies magic, version, checksum."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    blob = path.read_bytes()
    if len(blob) < 12 or blob[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file (bad magic)")
    (header_len,) = struct.unpack("<I", blob[8:12])
    try:
        header = json.loads(blob[12 : 12 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header in {path}: {exc}") from exc
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {header.get('version')} unsupported; "
            f"this build reads version {FORMAT_VERSION}"
        )
    payload = blob[12 + header_len :]
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise CheckpointError(f"checksum mismatch: {path} is corrupt or truncated")
    arrays = {}
    for entry in header["arrays"]:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(raw, dtype=entry["dtype"]).reshape(
            entry["shape"]
        ).copy()
    return arrays, header["meta"]


def state_dict_from_flat(flat: dict[str, np.ndarray], prefix: str) -> dict[str, torch.Tensor]:
    """Extract `prefix/...` entries back into a torch state dict."""
    out = {}
    plen = len(prefix) + 1
    for name, arr in flat.items():
        if name.startswith(prefix + "/"):
            out[name[plen:]] = torch.from_numpy(arr)
    return out


def load_into_module(module: torch.nn.Module, flat: dict[str, np.ndarray], prefix: str) -> None:
    """Load parameters, naming the offending layer on any shape mismatch."""
    state = state_dict_from_flat(flat, prefix)
    current = module.state_dict()
    if set(state) != set(current):
        missing = sorted(set(current) - set(state))
        extra = sorted(set(state) - set(current))
        raise CheckpointError(
            f"checkpoint does not match model under {prefix!r}: "
            f"missing={missing[:5]} unexpected={extra[:5]}"
        )
    for name, tensor in state.items():
        if tuple(tensor.shape) != tuple(current[name].shape):
            raise CheckpointError(
                f"shape mismatch for layer {prefix}/{name}: checkpoint "
                f"{tuple(tensor.shape)} vs model {tuple(current[name].shape)} "
                f"(width multiplier / architecture config differs?)"
            )
    module.load_state_dict(state)
