"""End-to-end orchestration: navigation, interaction and action chains."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import (
    ABS_SLICE, BodyMotion, BodyPose, GoalSpec, RigidTransform2D, RootPose,
    RootTrajectory, StyleVocabulary, decode_pose_vector, encode_pose_vector,
    normalize_heading,
)
from ..datasynth.corpus import COND_CELL, canonical_floor_grid
from ..datasynth.interaction import seat_pelvis_pose
from ..denoiser.model import DenoiserParams
from ..errors import PlacementError, ValidationError
from ..geometry import (
    FloorMap, Scene, SceneObject, distance_transform, make_basis,
    compute_object_bps, query_field, voxelize_box_union,
)
from ..sampler import (
    BlendSpec, DiffusionSchedule, GuidanceConfig, SceneContext, sample,
)
from .goals import goal_near_object
from .lifting import KinematicLifter, LiftingBackend

NAV_WINDOW_MARGIN = 3.0  # canonical-frame map window around start/goal, meters
INTERACTION_RADIUS = 2.0  # the start pose must be this close to the object


@dataclass
class NavigationRequest:
    scene: Scene
    start: RootPose
    style_label: str = "walk"
    goal: RootPose | None = None
    target_object: str | None = None
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig.navigation)
    blend: BlendSpec | None = None  # path in world coordinates
    seed: int = 0
    horizon: int = 100
    mask_mode: str = "goal"

    def __post_init__(self):
        if self.goal is None and self.target_object is None:
            raise ValidationError("request needs an explicit goal or a target object")


@dataclass
class NavigationResult:
    trajectory: RootTrajectory  # world frame
    body: BodyMotion | None
    raw_frames: np.ndarray  # world frame, before endpoint pinning
    snapshots: list  # (step, world frames)
    goal: RootPose
    start: RootPose


def _canonical_maps(scene: Scene, world_from_canon: RigidTransform2D,
                    anchor_frames: np.ndarray):
    """Conditioning grid and guidance field resampled into the request frame."""
    grid, origin, cell = canonical_floor_grid(
        scene.floor, world_from_canon, anchor_frames, cell=COND_CELL,
        margin=NAV_WINDOW_MARGIN)
    fine, forigin, fcell = canonical_floor_grid(
        scene.floor, world_from_canon, anchor_frames, cell=scene.floor.cell,
        margin=NAV_WINDOW_MARGIN)
    fmap = FloorMap(origin=forigin, cell=fcell, walkable=fine > 0.5)
    return (grid, origin, cell), distance_transform(fmap)


def navigate(req: NavigationRequest, params: DenoiserParams,
             schedule: DiffusionSchedule, lifter: LiftingBackend | None = None,
             vocabulary: StyleVocabulary | None = None) -> NavigationResult:
    """Sample a scene-aware root trajectory and lift it to a body motion.

    Runs in the coordinate frame of the start pose: the scene's walkable
    grid is resampled into that frame for conditioning and collision
    guidance, and the result is mapped back to world coordinates with the
    endpoints pinned to the request values.
    """
    scene = req.scene
    sval, _ = query_field(scene.distance_field(), req.start.x, req.start.z)
    if sval > 0.0:
        raise PlacementError("start pose lies outside the walkable region")
    goal = req.goal if req.goal is not None else goal_near_object(scene, req.target_object)

    world_from_canon = RigidTransform2D.from_pose(normalize_heading(req.start))
    canon_from_world = world_from_canon.inverse()
    start_c = canon_from_world.apply_pose(req.start)
    goal_c = canon_from_world.apply_pose(goal)
    anchor = np.zeros((2, 5))
    anchor[0] = start_c.as_vector()
    anchor[1] = goal_c.as_vector()
    (grid, origin, cell), canon_field = _canonical_maps(scene, world_from_canon, anchor)

    blend_c = None
    if req.blend is not None:
        path_c = canon_from_world.apply_xz(req.blend.path)
        blend_c = BlendSpec(path_c, req.blend.scale)

    vocab = vocabulary if vocabulary is not None else StyleVocabulary()
    goal_spec = GoalSpec(start=start_c, goal=goal_c, style_label=req.style_label,
                         horizon=req.horizon, vocabulary=vocab)
    ctx = SceneContext(field=canon_field, cond_grid=grid, cond_origin=origin,
                       cond_cell=cell)
    result = sample(params, schedule, goal_spec, ctx, req.guidance, blend_c,
                    seed=req.seed, mask_mode=req.mask_mode)

    frames_w = world_from_canon.apply_frames(result.motion.frames)
    # re-pin the masked endpoints so world-frame equality is exact
    frames_w[0] = req.start.as_vector()
    if req.mask_mode == "goal":
        frames_w[-1] = goal.as_vector()
    traj_w = RootTrajectory(frames_w, result.motion.frame_rate)
    raw_w = world_from_canon.apply_frames(result.raw_frames)
    snaps_w = [(t, world_from_canon.apply_frames(f)) for t, f in result.snapshots]
    snaps_w[-1] = (0, traj_w.frames)  # the last snapshot is the pinned output

    body = None
    if lifter is not None:
        body = lifter.lift(traj_w, req.style_label)
    return NavigationResult(trajectory=traj_w, body=body, raw_frames=raw_w,
                            snapshots=snaps_w, goal=goal, start=req.start)


@dataclass
class InteractionResult:
    body: BodyMotion  # world frame
    raw_frames: np.ndarray
    snapshots: list
    goal: RootPose
    volume_seed_pose: tuple


def transformed_chair(chair: SceneObject, canon_from_world: RigidTransform2D) -> SceneObject:
    pos_xz = canon_from_world.apply_xz(np.array([[chair.position[0], chair.position[2]]]))[0]
    c, s = canon_from_world.apply_heading(np.cos(chair.yaw), np.sin(chair.yaw))
    return SceneObject(id=chair.id, kind=chair.kind,
                       position=(float(pos_xz[0]), chair.position[1], float(pos_xz[1])),
                       yaw=float(np.arctan2(s, c)), half_extents=chair.half_extents,
                       category=chair.category)


def interact(scene: Scene, object_id: str, start: BodyPose,
             params: DenoiserParams, schedule: DiffusionSchedule,
             goal: RootPose | None = None, style_label: str = "sit-down",
             guidance: GuidanceConfig | None = None, seed: int = 0,
             horizon: int = 120, vocabulary: StyleVocabulary | None = None,
             volume_cell: float = 0.05, volume_cache=None) -> InteractionResult:
    """Full-body interaction near one object, in the start pose's frame.

    The chair is re-voxelized in the canonical frame (so BPS features and
    SDF guidance share the sampling frame); features recompute from the
    noisy input at every denoising step inside the sampler. A VolumeCache
    keyed by the transformed chair entry skips repeat voxelizations.
    """
    chair = scene.object_by_id(object_id)
    dist = np.hypot(start.abs.x - chair.position[0], start.abs.z - chair.position[2])
    if dist > INTERACTION_RADIUS:
        raise PlacementError(
            f"start is {dist:.2f} m from {object_id!r}; interaction expects <= "
            f"{INTERACTION_RADIUS} m")
    if guidance is None:
        guidance = GuidanceConfig.interaction()
    if goal is None:
        goal = seat_pelvis_pose(chair)

    world_from_canon = RigidTransform2D.from_pose(normalize_heading(start.abs))
    canon_from_world = world_from_canon.inverse()
    chair_c = transformed_chair(chair, canon_from_world)
    if volume_cache is not None:
        vol = volume_cache.get(chair_c, cell=volume_cell, padding=1.2)
    else:
        vol = voxelize_box_union(chair_c.boxes(), center=np.asarray(chair_c.position),
                                 cell=volume_cell)
    basis = make_basis(chair_c.position)
    b_o = compute_object_bps(vol, basis)

    start_vec = encode_pose_vector(start)
    start_c_frames = canon_from_world.apply_frames(start_vec[None, :5])
    start_c = decode_pose_vector(
        np.concatenate([start_c_frames[0], start_vec[5:]]))
    goal_c = canon_from_world.apply_pose(goal)

    vocab = vocabulary if vocabulary is not None else StyleVocabulary()
    goal_spec = GoalSpec(start=start_c, goal=goal_c, style_label=style_label,
                         horizon=horizon, vocabulary=vocab)
    ctx = SceneContext(volume=vol, basis_points=basis.points, object_bps=b_o,
                       skeleton=params_skeleton(params))
    result = sample(params, schedule, goal_spec, ctx, guidance, seed=seed)

    frames_w = np.array(result.motion.frames)
    frames_w[:, ABS_SLICE] = world_from_canon.apply_frames(frames_w[:, ABS_SLICE])
    frames_w[0] = start_vec
    frames_w[-1, :5] = goal.as_vector()
    body = BodyMotion(frames_w, result.motion.frame_rate, result.motion.skeleton)
    raw_w = np.array(result.raw_frames)
    raw_w[:, ABS_SLICE] = world_from_canon.apply_frames(raw_w[:, ABS_SLICE])
    snaps = [(t, world_from_canon.apply_frames(f[:, :5])) for t, f in result.snapshots]
    snaps[-1] = (0, np.array(frames_w[:, :5]))
    return InteractionResult(body=body, raw_frames=raw_w, snapshots=snaps,
                             goal=goal, volume_seed_pose=(chair.position, chair.yaw))


def params_skeleton(params: DenoiserParams):
    from ..core import default_skeleton
    return default_skeleton()


@dataclass
class ChainAction:
    kind: str  # "navigate" | "interact"
    style_label: str
    target_object: str | None = None
    goal: RootPose | None = None
    seed: int = 0
    guidance: GuidanceConfig | None = None
    blend: BlendSpec | None = None


@dataclass
class ChainResult:
    motions: list  # NavigationResult | InteractionResult per stage
    completed: bool
    error: str | None = None


def chain(scene: Scene, actions: list[ChainAction], start: RootPose,
          nav_params: DenoiserParams, nav_schedule: DiffusionSchedule,
          int_params: DenoiserParams | None = None,
          int_schedule: DiffusionSchedule | None = None,
          lifter: LiftingBackend | None = None,
          nav_horizon: int = 100, int_horizon: int = 120) -> ChainResult:
    """Run an alternating action sequence with exact pose hand-off.

    Each stage starts at the previous stage's final pose; a stage failure
    aborts the chain and returns the partial results.
    """
    results: list = []
    lifter = lifter if lifter is not None else KinematicLifter()
    current_root = start
    current_body: BodyPose | None = None
    for action in actions:
        try:
            if action.kind == "navigate":
                req = NavigationRequest(
                    scene=scene, start=current_root, style_label=action.style_label,
                    goal=action.goal, target_object=action.target_object,
                    guidance=action.guidance or GuidanceConfig.navigation(),
                    blend=action.blend, seed=action.seed, horizon=nav_horizon)
                res = navigate(req, nav_params, nav_schedule, lifter=lifter)
                results.append(res)
                current_root = RootPose.from_vector(res.trajectory.frames[-1])
                current_body = (decode_pose_vector(res.body.frames[-1])
                                if res.body is not None else None)
            elif action.kind == "interact":
                if int_params is None or int_schedule is None:
                    raise ValidationError("chain has no interaction model loaded")
                if current_body is None:
                    raise ValidationError("interaction needs a full-body hand-off pose")
                res = interact(scene, action.target_object, current_body,
                               int_params, int_schedule, goal=action.goal,
                               style_label=action.style_label,
                               guidance=action.guidance, seed=action.seed,
                               horizon=int_horizon)
                results.append(res)
                current_body = decode_pose_vector(res.body.frames[-1])
                current_root = current_body.abs
            else:
                raise ValidationError(f"unknown action kind {action.kind!r}")
        except Exception as exc:  # noqa: BLE001 - partial results by contract
            return ChainResult(motions=results, completed=False, error=str(exc))
    return ChainResult(motions=results, completed=True)
