"""Checkpoint container: JSON manifest + flat little-endian tensor payloads."""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import ValidationError
from .model import DenoiserConfig, DenoiserParams, params_hash

MAGIC = b"SMCK"
VERSION = 1


def checkpoint_to_bytes(params: DenoiserParams) -> bytes:
    tensors = {f"base/{k}": v for k, v in params.base.items()}
    if params.control is not None:
        tensors.update({f"control/{k}": v for k, v in params.control.items()})
    index = []
    payload = bytearray()
    for name in sorted(tensors.keys()):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        index.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload.extend(arr.tobytes())
    manifest = {
        "version": VERSION,
        "config": params.config.to_json(),
        "standardization": {
            "mean": [float(v) for v in params.mean],
            "std": [float(v) for v in params.std],
        },
        "frozen_base": params.frozen_base,
        "base_hash": params_hash(params.base),
        "control_hash": params_hash(params.control) if params.control is not None else None,
        "tensors": index,
    }
    hdr = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + struct.pack("<I", len(hdr)) + hdr + bytes(payload)


def checkpoint_from_bytes(data: bytes) -> DenoiserParams:
    if data[:4] != MAGIC:
        raise ValidationError("not a checkpoint file")
    (hlen,) = struct.unpack_from("<I", data, 4)
    manifest = json.loads(data[8:8 + hlen].decode())
    cfg = DenoiserConfig.from_json(manifest["config"])
    body = 8 + hlen
    base: dict[str, np.ndarray] = {}
    control: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f4", offset=body + entry["offset"],
                            count=count).reshape(shape).copy()
        group, key = entry["name"].split("/", 1)
        (base if group == "base" else control)[key] = arr
    params = DenoiserParams(
        config=cfg, base=base, control=control or None,
        frozen_base=manifest["frozen_base"],
        mean=np.array(manifest["standardization"]["mean"], dtype=np.float64),
        std=np.array(manifest["standardization"]["std"], dtype=np.float64))
    if params_hash(params.base) != manifest["base_hash"]:
        raise ValidationError("checkpoint base hash mismatch")
    return params


def save_checkpoint(path, params: DenoiserParams) -> None:
    with open(path, "wb") as f:
        f.write(checkpoint_to_bytes(params))


def load_checkpoint(path) -> DenoiserParams:
    with open(path, "rb") as f:
        return checkpoint_from_bytes(f.read())
