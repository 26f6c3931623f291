"""Motion file container: JSON manifest + raw little-endian float32 payload.

Single-file layout:
    b"SMOT" | u32 header length (LE) | header JSON (utf-8) | frames as f32 LE

The header carries {version, kind, N, frame_rate, skeleton?}. Payload frames
are stored row-major, one frame per row. Floats are truncated to 32 bits on
write, so writing is a projection: load(save(x)) is the f32 image of x and
saving again is byte-stable.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from ..errors import ValidationError
from .types import BODY_WIDTH, ROOT_WIDTH, BodyMotion, RootTrajectory, Skeleton

MAGIC = b"SMOT"
FORMAT_VERSION = 1


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _skeleton_to_json(sk: Skeleton) -> dict:
    return {
        "names": list(sk.names),
        "parents": list(sk.parents),
        "offsets": [[float(v) for v in row] for row in sk.offsets],
        "foot_joints": list(sk.foot_joints),
        "mirror_pairs": [list(p) for p in sk.mirror_pairs],
        "joint_radii": [float(v) for v in sk.joint_radii],
    }


def _skeleton_from_json(d: dict) -> Skeleton:
    return Skeleton(
        names=tuple(d["names"]),
        parents=tuple(int(p) for p in d["parents"]),
        offsets=np.array(d["offsets"], dtype=np.float64),
        foot_joints=(int(d["foot_joints"][0]), int(d["foot_joints"][1])),
        mirror_pairs=tuple((int(a), int(b)) for a, b in d["mirror_pairs"]),
        joint_radii=np.array(d["joint_radii"], dtype=np.float64),
    )


def motion_to_bytes(motion: RootTrajectory | BodyMotion) -> bytes:
    if isinstance(motion, RootTrajectory):
        header = {
            "version": FORMAT_VERSION,
            "kind": "root",
            "N": len(motion),
            "width": ROOT_WIDTH,
            "frame_rate": motion.frame_rate,
        }
    elif isinstance(motion, BodyMotion):
        header = {
            "version": FORMAT_VERSION,
            "kind": "body",
            "N": len(motion),
            "width": BODY_WIDTH,
            "frame_rate": motion.frame_rate,
            "skeleton": _skeleton_to_json(motion.skeleton),
        }
    else:
        raise ValidationError(f"cannot serialize {type(motion).__name__}")
    hdr = _canonical_json(header)
    payload = motion.frames.astype("<f4").tobytes()
    return MAGIC + struct.pack("<I", len(hdr)) + hdr + payload


def motion_from_bytes(data: bytes) -> RootTrajectory | BodyMotion:
    if data[:4] != MAGIC:
        raise ValidationError("not a motion file (bad magic)")
    (hlen,) = struct.unpack_from("<I", data, 4)
    header = json.loads(data[8:8 + hlen].decode("utf-8"))
    n, width = header["N"], header["width"]
    raw = np.frombuffer(data, dtype="<f4", offset=8 + hlen, count=n * width)
    frames = raw.reshape(n, width).astype(np.float64)
    if header["kind"] == "root":
        return RootTrajectory(frames, header["frame_rate"])
    if header["kind"] == "body":
        return BodyMotion(frames, header["frame_rate"], _skeleton_from_json(header["skeleton"]))
    raise ValidationError(f"unknown motion kind {header['kind']!r}")


def save_motion(path, motion: RootTrajectory | BodyMotion) -> None:
    with open(path, "wb") as f:
        f.write(motion_to_bytes(motion))


def load_motion(path) -> RootTrajectory | BodyMotion:
    with open(path, "rb") as f:
        return motion_from_bytes(f.read())


def motion_to_csv(motion: RootTrajectory | BodyMotion) -> str:
    """Debug export: one frame per row, repeatable formatting."""
    buf = io.StringIO()
    width = motion.frames.shape[1]
    if width == ROOT_WIDTH:
        buf.write("x,y,z,cos_h,sin_h\n")
    else:
        buf.write(",".join(f"c{i}" for i in range(width)) + "\n")
    for row in motion.frames:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
