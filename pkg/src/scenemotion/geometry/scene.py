"""Scene container, its JSON file format, rasterization and SDF caching.

Scene file schema:
    {version, floor: {origin, cell, width, height, walkable: RLE ints},
     objects: [{id, kind, pose: {position, yaw}, half_extents | mesh_path,
                category}]}

The walkable grid is run-length encoded in C order starting with the count
of non-walkable cells.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .floor import DistanceField2D, FloorMap, distance_transform
from .volume import (
    DEFAULT_CELL, DEFAULT_PADDING, ObjectVolume, voxelize_box_object,
    voxelize_box_union, voxelize_mesh,
)

SCENE_VERSION = 1

CHAIR_BACK_HEIGHT = 0.45
CHAIR_BACK_THICKNESS = 0.04


@dataclass(frozen=True)
class SceneObject:
    id: str
    kind: str  # "box" | "chair" | "mesh"
    position: tuple[float, float, float]
    yaw: float = 0.0
    half_extents: tuple[float, float, float] | None = None
    mesh_path: str | None = None
    category: str = "obstacle"

    def __post_init__(self):
        if self.kind in ("box", "chair") and self.half_extents is None:
            raise ValidationError(f"object {self.id!r}: kind {self.kind!r} needs half_extents")
        if self.kind == "mesh" and self.mesh_path is None:
            raise ValidationError(f"object {self.id!r}: mesh kind needs mesh_path")
        if self.kind not in ("box", "chair", "mesh"):
            raise ValidationError(f"object {self.id!r}: unknown kind {self.kind!r}")

    @property
    def forward(self) -> tuple[float, float]:
        """Front direction in (x, z); local +z is the front axis."""
        return (float(np.sin(self.yaw)), float(np.cos(self.yaw)))

    @property
    def seat_top(self) -> float:
        if self.kind != "chair":
            raise ValidationError(f"object {self.id!r} has no seat")
        return self.position[1] + self.half_extents[1]

    def boxes(self) -> list[tuple[np.ndarray, np.ndarray, float]]:
        """Solid boxes (half_extents, position, yaw) that make up the object."""
        if self.kind == "box":
            return [(np.asarray(self.half_extents), np.asarray(self.position), self.yaw)]
        if self.kind == "chair":
            hx, hy, hz = self.half_extents
            seat = (np.array([hx, hy, hz]), np.asarray(self.position), self.yaw)
            # backrest behind the seat (local -z), rising above it
            s, c = np.sin(self.yaw), np.cos(self.yaw)
            local = np.array([0.0, hy + CHAIR_BACK_HEIGHT / 2.0, -(hz + CHAIR_BACK_THICKNESS)])
            off = np.array([c * local[0] + s * local[2], local[1], -s * local[0] + c * local[2]])
            back = (np.array([hx, CHAIR_BACK_HEIGHT / 2.0, CHAIR_BACK_THICKNESS]),
                    np.asarray(self.position) + off, self.yaw)
            return [seat, back]
        raise ValidationError(f"object {self.id!r}: mesh footprint has no box decomposition")

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "pose": {"position": [float(v) for v in self.position], "yaw": float(self.yaw)},
            "category": self.category,
        }
        if self.half_extents is not None:
            d["half_extents"] = [float(v) for v in self.half_extents]
        if self.mesh_path is not None:
            d["mesh_path"] = self.mesh_path
        return d

    @staticmethod
    def from_json(d: dict) -> "SceneObject":
        return SceneObject(
            id=d["id"],
            kind=d["kind"],
            position=tuple(d["pose"]["position"]),
            yaw=float(d["pose"]["yaw"]),
            half_extents=tuple(d["half_extents"]) if "half_extents" in d else None,
            mesh_path=d.get("mesh_path"),
            category=d.get("category", "obstacle"),
        )


@dataclass(frozen=True)
class Scene:
    floor: FloorMap
    objects: tuple[SceneObject, ...] = ()
    _field: list = field(default_factory=list, compare=False, repr=False)

    def object_by_id(self, oid: str) -> SceneObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise ValidationError(f"scene has no object {oid!r}")

    def distance_field(self) -> DistanceField2D:
        # lazily computed once; the list is a mutable slot on a frozen dataclass
        if not self._field:
            self._field.append(distance_transform(self.floor))
        return self._field[0]


def encode_rle(bits: np.ndarray) -> list[int]:
    """Run lengths over the flattened grid, first run counts False cells."""
    flat = np.asarray(bits, dtype=bool).reshape(-1)
    runs: list[int] = []
    current = False
    count = 0
    for v in flat:
        if v == current:
            count += 1
        else:
            runs.append(count)
            current = v
            count = 1
    runs.append(count)
    return runs


def decode_rle(runs: list[int], shape: tuple[int, int]) -> np.ndarray:
    out = np.empty(shape[0] * shape[1], dtype=bool)
    pos = 0
    val = False
    for r in runs:
        out[pos:pos + r] = val
        pos += r
        val = not val
    if pos != out.size:
        raise ValidationError("RLE does not match grid size")
    return out.reshape(shape)


def scene_to_json(scene: Scene) -> dict:
    f = scene.floor
    return {
        "version": SCENE_VERSION,
        "floor": {
            "origin": [f.origin[0], f.origin[1]],
            "cell": f.cell,
            "width": f.width,
            "height": f.height,
            "walkable": encode_rle(f.walkable),
        },
        "objects": [o.to_json() for o in scene.objects],
    }


def scene_from_json(d: dict) -> Scene:
    fl = d["floor"]
    walk = decode_rle(fl["walkable"], (fl["width"], fl["height"]))
    fmap = FloorMap(origin=tuple(fl["origin"]), cell=fl["cell"], walkable=walk)
    return Scene(floor=fmap, objects=tuple(SceneObject.from_json(o) for o in d["objects"]))


def canonical_scene_bytes(scene: Scene) -> bytes:
    return json.dumps(scene_to_json(scene), sort_keys=True, separators=(",", ":")).encode()


def scene_id(scene: Scene) -> str:
    return hashlib.sha256(canonical_scene_bytes(scene)).hexdigest()[:16]


def save_scene(path, scene: Scene) -> None:
    with open(path, "wb") as f:
        f.write(canonical_scene_bytes(scene))


def load_scene(path) -> Scene:
    with open(path, "rb") as f:
        return scene_from_json(json.loads(f.read().decode()))


def rasterize_floor(room_min, room_max, objects, cell: float = 0.05,
                    margin: float = 0.0) -> FloorMap:
    """Walkable grid for a rectangular room with solid objects carved out.

    A cell is walkable when its center lies inside the room and outside every
    object footprint (the vertical extent of objects is ignored; anything in
    the scene blocks walking).
    """
    x0, z0 = float(room_min[0]) - margin, float(room_min[1]) - margin
    x1, z1 = float(room_max[0]) + margin, float(room_max[1]) + margin
    w = max(2, int(np.ceil((x1 - x0) / cell)))
    h = max(2, int(np.ceil((z1 - z0) / cell)))
    xs = x0 + (np.arange(w) + 0.5) * cell
    zs = z0 + (np.arange(h) + 0.5) * cell
    cx, cz = np.meshgrid(xs, zs, indexing="ij")
    walk = (cx >= room_min[0]) & (cx <= room_max[0]) & (cz >= room_min[1]) & (cz <= room_max[1])
    for obj in objects:
        for half, pos, yaw in obj.boxes():
            s, c = np.sin(yaw), np.cos(yaw)
            dx = cx - pos[0]
            dz = cz - pos[2]
            lx = c * dx - s * dz
            lz = s * dx + c * dz
            inside = (np.abs(lx) <= half[0]) & (np.abs(lz) <= half[2])
            walk &= ~inside
    return FloorMap(origin=(x0, z0), cell=cell, walkable=walk)


# --- volume (de)serialization and caching -----------------------------------

_VOL_MAGIC = b"SVOL"


def volume_to_bytes(vol: ObjectVolume) -> bytes:
    header = json.dumps({
        "version": 1,
        "origin": list(vol.origin),
        "cell": vol.cell,
        "dims": list(vol.dims),
        "center": list(vol.center),
    }, sort_keys=True, separators=(",", ":")).encode()
    return _VOL_MAGIC + struct.pack("<I", len(header)) + header + vol.sdf.astype("<f4").tobytes()


def volume_from_bytes(data: bytes) -> ObjectVolume:
    if data[:4] != _VOL_MAGIC:
        raise ValidationError("not a volume file")
    (hlen,) = struct.unpack_from("<I", data, 4)
    hdr = json.loads(data[8:8 + hlen].decode())
    dims = tuple(hdr["dims"])
    sdf = np.frombuffer(data, dtype="<f4", offset=8 + hlen,
                        count=dims[0] * dims[1] * dims[2]).reshape(dims)
    return ObjectVolume(tuple(hdr["origin"]), hdr["cell"], sdf.copy(), tuple(hdr["center"]))


def build_object_volume(obj: SceneObject, cell: float = DEFAULT_CELL,
                        padding: float = DEFAULT_PADDING,
                        mesh_loader=None) -> ObjectVolume:
    if obj.kind == "box":
        return voxelize_box_object(obj.half_extents, obj.position, obj.yaw, cell, padding)
    if obj.kind == "chair":
        return voxelize_box_union(obj.boxes(), center=np.asarray(obj.position),
                                  cell=cell, padding=padding)
    if obj.kind == "mesh":
        if mesh_loader is None:
            raise ValidationError("mesh objects need a mesh_loader")
        return voxelize_mesh(mesh_loader(obj.mesh_path), cell, padding)
    raise ValidationError(f"cannot voxelize kind {obj.kind!r}")


class VolumeCache:
    """Disk cache of object SDF volumes keyed by the object entry's content."""

    def __init__(self, directory):
        from pathlib import Path
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)

    def key(self, obj: SceneObject, cell: float, padding: float) -> str:
        payload = json.dumps({"object": obj.to_json(), "cell": cell, "padding": padding},
                             sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(payload).hexdigest()[:24]

    def get(self, obj: SceneObject, cell: float = DEFAULT_CELL,
            padding: float = DEFAULT_PADDING, mesh_loader=None) -> ObjectVolume:
        path = self.dir / f"{self.key(obj, cell, padding)}.svol"
        if path.exists():
            return volume_from_bytes(path.read_bytes())
        vol = build_object_volume(obj, cell, padding, mesh_loader)
        path.write_bytes(volume_to_bytes(vol))
        return vol
