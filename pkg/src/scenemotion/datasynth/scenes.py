"""Procedural indoor scenes: rectangular rooms with box obstacles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import SceneMotionError
from ..geometry import FloorMap, Scene, SceneObject, rasterize_floor

DEFAULT_CELL = 0.05


@dataclass(frozen=True)
class SceneSpec:
    """Room extents plus obstacle parameters; fully seeded and replayable."""

    room_min: tuple[float, float]
    room_max: tuple[float, float]
    objects: tuple[SceneObject, ...]
    seed: int

    def build(self, cell: float = DEFAULT_CELL) -> Scene:
        floor = rasterize_floor(self.room_min, self.room_max, self.objects, cell=cell)
        return Scene(floor=floor, objects=self.objects)


def walkable_connected(fmap: FloorMap) -> bool:
    """Flood-fill connectivity of the walkable region (8-connected)."""
    labels, count = ndimage.label(fmap.walkable, structure=np.ones((3, 3), dtype=int))
    return count <= 1


def generate_scene(seed: int, difficulty: float = 0.5, with_chair: bool = False,
                   cell: float = DEFAULT_CELL, max_retries: int = 50) -> tuple[SceneSpec, Scene]:
    """Seeded room with 2-8 obstacles (none at difficulty 0), connected floor.

    Heavier difficulty packs in more and bigger obstacles; generation retries
    with fresh layouts until the walkable region is a single component.
    """
    if not 0.0 <= difficulty <= 1.0:
        raise SceneMotionError(f"difficulty {difficulty} outside [0, 1]")
    rng = np.random.default_rng(seed)
    w = float(rng.uniform(4.0, 10.0))
    d = float(rng.uniform(4.0, 10.0))
    room_min = (-w / 2.0, -d / 2.0)
    room_max = (w / 2.0, d / 2.0)
    n_obstacles = 0 if difficulty == 0.0 else int(round(2 + 6 * difficulty * rng.uniform(0.6, 1.0)))

    for attempt in range(max_retries):
        objects = []
        for i in range(n_obstacles):
            hx = float(rng.uniform(0.2, 0.5 + 0.4 * difficulty))
            hz = float(rng.uniform(0.2, 0.5 + 0.4 * difficulty))
            hy = float(rng.uniform(0.3, 0.9))
            margin = max(hx, hz) + 0.3
            px = float(rng.uniform(room_min[0] + margin, room_max[0] - margin))
            pz = float(rng.uniform(room_min[1] + margin, room_max[1] - margin))
            yaw = float(rng.uniform(0.0, 2.0 * np.pi))
            objects.append(SceneObject(
                id=f"obstacle{i}", kind="box", position=(px, hy, pz), yaw=yaw,
                half_extents=(hx, hy, hz), category="obstacle"))
        if with_chair:
            seat_h = float(rng.uniform(0.38, 0.52))
            margin = 0.9
            px = float(rng.uniform(room_min[0] + margin, room_max[0] - margin))
            pz = float(rng.uniform(room_min[1] + margin, room_max[1] - margin))
            yaw = float(rng.uniform(0.0, 2.0 * np.pi))
            # solid base up to the seat surface; the backrest comes from boxes()
            objects.append(SceneObject(
                id="chair0", kind="chair",
                position=(px, seat_h / 2.0, pz), yaw=yaw,
                half_extents=(0.24, seat_h / 2.0, 0.22), category="chair"))
        spec = SceneSpec(room_min=room_min, room_max=room_max,
                         objects=tuple(objects), seed=seed)
        scene = spec.build(cell=cell)
        if walkable_connected(scene.floor):
            return spec, scene
    raise SceneMotionError(f"scene generation exhausted {max_retries} retries (seed {seed})")


def mirror_scene(scene: Scene) -> Scene:
    """Flip the scene about the x = 0 plane (x -> -x)."""
    f = scene.floor
    walk = f.walkable[::-1, :].copy()
    new_origin = (-(f.origin[0] + f.width * f.cell), f.origin[1])
    floor = FloorMap(origin=new_origin, cell=f.cell, walkable=walk)
    objects = []
    for o in scene.objects:
        objects.append(SceneObject(
            id=o.id, kind=o.kind,
            position=(-o.position[0], o.position[1], o.position[2]),
            yaw=-o.yaw, half_extents=o.half_extents, mesh_path=o.mesh_path,
            category=o.category))
    return Scene(floor=floor, objects=tuple(objects))
