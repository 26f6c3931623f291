"""Goal-pose heuristics near interaction objects."""

from __future__ import annotations

import numpy as np

from ..core import RootPose
from ..errors import PlacementError
from ..geometry import Scene, query_field

STAND_HEIGHT = 0.90
GOAL_MARGIN = 0.1  # required clearance inside the walkable region


def goal_near_object(scene: Scene, object_id: str, standoff: float = 0.8,
                     height: float = STAND_HEIGHT) -> RootPose:
    """Standing pose `standoff` meters out along the object's front axis.

    If the front is blocked the pose slides along the standoff arc (in
    widening steps of 15 degrees) until a walkable spot appears; the heading
    always faces the object center.
    """
    obj = scene.object_by_id(object_id)
    cx, cz = obj.position[0], obj.position[2]
    field = scene.distance_field()
    base = np.arctan2(*obj.forward)  # angle of the front axis
    sweep = [0.0]
    for k in range(1, 13):
        sweep.extend([k * np.pi / 12.0, -k * np.pi / 12.0])
    for delta in sweep:
        ang = base + delta
        px = cx + standoff * np.sin(ang)
        pz = cz + standoff * np.cos(ang)
        val, _ = query_field(field, px, pz)
        if val <= -GOAL_MARGIN:
            theta = np.arctan2(cx - px, cz - pz)
            return RootPose(px, height, pz, float(np.cos(theta)), float(np.sin(theta)))
    raise PlacementError(
        f"no free goal pose on the {standoff} m arc around {object_id!r}")
