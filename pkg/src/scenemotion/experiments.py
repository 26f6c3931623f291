"""Desk-scale experiment wiring: corpus -> datasets -> checkpoints -> evals.

Model sizes here are the desk-scale experiment sizes (small enough that the
full train + fine-tune + evaluation loop fits a single workstation core);
DenoiserConfig's own defaults describe the larger reference model.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BODY_WIDTH, BodyPose, GoalSpec, RigidTransform2D, RootPose,
    StyleVocabulary, canonicalize_body_frames, decode_pose_vector,
)
from .datasynth import (
    CorpusResult, canonical_floor_grid, corpus_motion, corpus_scene,
    generate_interaction, generate_scene,
)
from .datasynth.interaction import seat_pelvis_pose
from .denoiser import (
    DenoiserConfig, DenoiserParams, SceneBatchBuilder, TrainSettings,
    finetune_control, train_base,
)
from .errors import SceneMotionError
from .eval import collision_ratio, diversity, goal_errors, penetration
from .geometry import Scene, SceneObject, box_sdf, voxelize_box_union
from .geometry.bps import unit_ball_offsets
from .pipeline import NavigationRequest, navigate
from .pipeline.runner import interact
from .sampler import (
    DiffusionSchedule, GuidanceConfig, SceneContext, cosine_schedule,
    sample_batch,
)
from .sampler.masking import interaction_goal_mask

log = logging.getLogger(__name__)

VOCAB = StyleVocabulary()

# desk-scale experiment sizes
NAV_CONFIG = DenoiserConfig(
    pose_width=5, max_frames=100, model_width=48, layers=2, heads=2,
    ffn_width=96, style_vocab_size=len(VOCAB), scene_feature_width=16,
    scene_mode="floor")
INT_CONFIG = DenoiserConfig(
    pose_width=BODY_WIDTH, max_frames=120, model_width=48, layers=2, heads=2,
    ffn_width=96, style_vocab_size=len(VOCAB), scene_feature_width=16,
    scene_mode="object")


def nav_training_data(corpus: CorpusResult, splits=("train", "val")):
    """Stack corpus pairs into training arrays plus per-pair floor payloads."""
    records = [r for r in corpus.records if r["split"] in splits]
    if not records:
        raise SceneMotionError(f"corpus has no pairs in splits {splits}")
    motions = {}
    scenes = {}
    arrays, styles, floors = [], [], []
    for r in records:
        mid, sid = r["motion"], r["scene"]
        if mid not in motions:
            motions[mid] = corpus_motion(corpus, mid)
        if sid not in scenes:
            scenes[sid] = corpus_scene(corpus, sid)
        traj = motions[mid]
        t = RigidTransform2D(r["transform"]["tx"], r["transform"]["tz"],
                             r["transform"]["cos"], r["transform"]["sin"])
        grid, origin, cell = canonical_floor_grid(scenes[sid].floor, t, traj.frames)
        arrays.append(traj.frames)
        styles.append(VOCAB.index(r["style"]))
        floors.append((grid, origin, cell))
    return np.stack(arrays), np.asarray(styles, dtype=np.int64), floors


def train_navigation(corpus: CorpusResult, base_steps: int = 20_000,
                     control_steps: int = 5_000, seed: int = 0,
                     config: DenoiserConfig = NAV_CONFIG,
                     schedule: DiffusionSchedule | None = None,
                     settings: TrainSettings = TrainSettings(),
                     verbose: bool = False):
    """Base training on canonical motions, then scene-aware fine-tuning."""
    if schedule is None:
        schedule = cosine_schedule()
    motions, styles, floors = nav_training_data(corpus)
    cb = _progress("base") if verbose else None
    base, base_losses = train_base(motions, styles, config, base_steps, seed,
                                   schedule=schedule, settings=settings, callback=cb)
    builder = SceneBatchBuilder(mode="floor", floors=floors)
    cb = _progress("control") if verbose else None
    tuned, ft_losses = finetune_control(base, motions, styles, builder,
                                        control_steps, seed + 1, schedule=schedule,
                                        settings=settings, callback=cb)
    return base, tuned, {"base_losses": base_losses, "control_losses": ft_losses}


def _progress(tag):
    t0 = time.time()

    def cb(step, loss):
        log.info("%s step %d loss %.4f (%.0fs)", tag, step, loss, time.time() - t0)
    return cb


# --- navigation evaluation ----------------------------------------------------


@dataclass
class NavCase:
    scene: Scene
    start: RootPose
    goal: RootPose
    style_label: str
    astar: np.ndarray | None = None  # reference path, world coords


def build_nav_cases(corpus: CorpusResult, n_cases: int, seed: int = 0,
                    horizon: int = 100) -> list[NavCase]:
    """Held-out cases built the way training pairs are built.

    A fresh (unseen-seed) locomotion clip is placed into a held-out scene and
    its endpoints become the start/goal, so every case is in-distribution and
    reachable at the requested style.
    """
    from .datasynth import place_motion
    from .datasynth.locomotion import generate_locomotion

    rng = np.random.default_rng(seed)
    test_ids = sorted({r["scene"] for r in corpus.records if r["split"] == "test"})
    scenes = [corpus_scene(corpus, sid) for sid in test_ids]
    extra_seed = 900_000 + seed
    if not scenes:
        for k in range(4):
            _, fresh = generate_scene(extra_seed + k, 0.8)
            scenes.append(fresh)
        extra_seed += 4
    styles = ("walk", "walk-fast", "tiptoe")
    cases: list[NavCase] = []
    motion_seed = 500_000 + 97 * seed
    misses = 0
    while len(cases) < n_cases:
        scene = scenes[len(cases) % len(scenes)]
        style = styles[len(cases) % len(styles)]
        traj = generate_locomotion(motion_seed, style, n=horizon)
        motion_seed += 1
        t = place_motion(traj, scene.floor, int(rng.integers(0, 2 ** 31)),
                         clearance=0.12, max_tries=60,
                         field=scene.distance_field())
        placed = t.apply_frames(traj.frames) if t is not None else None
        # prefer cases whose straight start-goal segment is obstructed, so a
        # scene-blind model measurably collides; give up per scene eventually
        if placed is None or (misses < 12 and not _segment_blocked(
                scene, placed[0, [0, 2]], placed[-1, [0, 2]])):
            misses += 1
            if placed is None or misses >= 12:
                _, fresh = generate_scene(extra_seed, 0.85)
                extra_seed += 1
                scenes[len(cases) % len(scenes)] = fresh
                misses = 0
            continue
        misses = 0
        cases.append(NavCase(
            scene=scene,
            start=RootPose.from_vector(placed[0]),
            goal=RootPose.from_vector(placed[-1]),
            style_label=style))
    return cases


def _segment_blocked(scene: Scene, a: np.ndarray, b: np.ndarray) -> bool:
    steps = max(int(np.linalg.norm(b - a) / (0.5 * scene.floor.cell)), 2)
    ts = np.linspace(0.0, 1.0, steps)
    pts = a[None, :] + ts[:, None] * (b - a)[None, :]
    from .geometry import query_field_many
    vals, _ = query_field_many(scene.distance_field(), pts)
    return bool(np.any(vals > 0.0))


def _nav_request(case: NavCase, guidance: GuidanceConfig, seed: int,
                 horizon: int, mask_mode: str = "goal") -> NavigationRequest:
    return NavigationRequest(scene=case.scene, start=case.start, goal=case.goal,
                             style_label=case.style_label, guidance=guidance,
                             seed=seed, horizon=horizon, mask_mode=mask_mode)


def goal_guidance_experiment(params: DenoiserParams, schedule: DiffusionSchedule,
                             cases: list[NavCase], goal_weight: float = 30.0,
                             horizon: int = 100) -> dict:
    """Raw endpoint error with vs without goal guidance, in-painting active.

    Both arms run the standard goal mask; the guided arm adds the
    through-denoiser goal term at the stock weight and the error is measured
    on the model's raw final-frame prediction (before endpoint pinning),
    which is what guidance can actually influence.
    """
    errs_off, errs_on = [], []
    for i, case in enumerate(cases):
        off = navigate(_nav_request(case, GuidanceConfig.none(), i, horizon),
                       params, schedule)
        on = navigate(_nav_request(
            case, GuidanceConfig(goal_weight=goal_weight, collision_weight=0.0,
                                 goal_gradient="input"),
            i, horizon), params, schedule)
        errs_off.append(goal_errors(off.raw_frames, case.goal)[0])
        errs_on.append(goal_errors(on.raw_frames, case.goal)[0])
    return {"goal_err_unguided": float(np.mean(errs_off)),
            "goal_err_guided": float(np.mean(errs_on))}


def collision_experiment(base: DenoiserParams, tuned: DenoiserParams,
                         schedule: DiffusionSchedule, cases: list[NavCase],
                         horizon: int = 100, n_seeds: int = 8) -> dict:
    """Collision ratio of the base-only unguided model vs the scene-aware
    branch with collision guidance; also per-case diversity over seeds."""
    ratios_base, ratios_tuned, diversities = [], [], []
    for i, case in enumerate(cases):
        field = case.scene.distance_field()
        off = navigate(_nav_request(case, GuidanceConfig.none(), i, horizon),
                       base, schedule)
        ratios_base.append(collision_ratio(off.trajectory, field))
        on = navigate(_nav_request(case, GuidanceConfig.navigation(), i, horizon),
                      tuned, schedule)
        ratios_tuned.append(collision_ratio(on.trajectory, field))
        batch = _nav_seed_batch(case, tuned, schedule, horizon,
                                seeds=[1000 * i + s for s in range(n_seeds)])
        diversities.append(diversity(batch))
    return {
        "collision_base_unguided": float(np.mean(ratios_base)),
        "collision_tuned_guided": float(np.mean(ratios_tuned)),
        "diversity_min": float(np.min(diversities)),
        "diversity_mean": float(np.mean(diversities)),
    }


def _nav_seed_batch(case: NavCase, params: DenoiserParams,
                    schedule: DiffusionSchedule, horizon: int, seeds) -> list:
    """Batched multi-seed sampling for one case (canonical frame math inline)."""
    from .core import normalize_heading
    from .pipeline.runner import _canonical_maps
    world_from_canon = RigidTransform2D.from_pose(normalize_heading(case.start))
    inv = world_from_canon.inverse()
    anchor = np.stack([inv.apply_pose(case.start).as_vector(),
                       inv.apply_pose(case.goal).as_vector()])
    (grid, origin, cell), canon_field = _canonical_maps(case.scene, world_from_canon, anchor)
    spec = GoalSpec(start=inv.apply_pose(case.start), goal=inv.apply_pose(case.goal),
                    style_label=case.style_label, horizon=horizon, vocabulary=VOCAB)
    ctx = SceneContext(field=canon_field, cond_grid=grid, cond_origin=origin,
                       cond_cell=cell)
    results = sample_batch(params, schedule, spec, ctx, GuidanceConfig.navigation(),
                           seeds=seeds)
    return [world_from_canon.apply_frames(r.motion.frames) for r in results]


# --- interaction training and evaluation --------------------------------------


@dataclass
class InteractionDataset:
    motions: np.ndarray  # (M, N, 268) canonical
    styles: np.ndarray
    object_bps: np.ndarray  # (M, K)
    basis_offsets: np.ndarray  # (K, 3), shared across items
    basis_centers: np.ndarray  # (M, 3)
    chairs: list  # canonical-frame chair objects


def chair_for_seed(rng: np.random.Generator) -> SceneObject:
    seat_h = float(rng.uniform(0.38, 0.52))
    return SceneObject(
        id="chair", kind="chair",
        position=(float(rng.uniform(-0.3, 0.3)), seat_h / 2.0,
                  float(rng.uniform(-0.3, 0.3))),
        yaw=float(rng.uniform(0, 2 * np.pi)),
        half_extents=(float(rng.uniform(0.2, 0.28)), seat_h / 2.0,
                      float(rng.uniform(0.18, 0.26))),
        category="chair")


def analytic_chair_bps(chair: SceneObject, basis_points: np.ndarray) -> np.ndarray:
    """|SDF| of the chair's box union at the basis points (training fast path)."""
    vals = None
    for half, pos, yaw in chair.boxes():
        s = box_sdf(basis_points, half, pos, np.cos(yaw), np.sin(yaw))
        vals = s if vals is None else np.minimum(vals, s)
    return np.abs(vals)


def build_interaction_dataset(n_items: int = 256, seed: int = 0,
                              horizon: int = 120,
                              bps_count: int = 1024) -> InteractionDataset:
    """Seeded sit/stand clips with matching canonical-frame chair features."""
    rng = np.random.default_rng(seed)
    offsets = unit_ball_offsets(bps_count)
    styles_cycle = ("sit-down", "stand-up", "walk-then-sit", "stand-then-walk")
    motions, styles, bps, centers, chairs = [], [], [], [], []
    for i in range(n_items):
        chair = chair_for_seed(rng)
        style = styles_cycle[i % len(styles_cycle)]
        motion = generate_interaction(seed * 5000 + i, chair, style, n=horizon)
        canon, world_from_canon = canonicalize_body_frames(motion.frames)
        inv = world_from_canon.inverse()
        from .pipeline.runner import transformed_chair
        chair_c = transformed_chair(chair, inv)
        basis_points = np.asarray(chair_c.position) + offsets
        motions.append(canon)
        styles.append(VOCAB.index(style))
        bps.append(analytic_chair_bps(chair_c, basis_points))
        centers.append(np.asarray(chair_c.position))
        chairs.append(chair_c)
    return InteractionDataset(
        motions=np.stack(motions), styles=np.asarray(styles, dtype=np.int64),
        object_bps=np.stack(bps).astype(np.float32), basis_offsets=offsets,
        basis_centers=np.stack(centers), chairs=chairs)


def train_interaction(dataset: InteractionDataset, base_steps: int = 4_000,
                      control_steps: int = 1_000, seed: int = 0,
                      config: DenoiserConfig = INT_CONFIG,
                      schedule: DiffusionSchedule | None = None,
                      settings: TrainSettings = TrainSettings(),
                      verbose: bool = False):
    if schedule is None:
        schedule = cosine_schedule()
    mask = interaction_goal_mask(config.max_frames, config.pose_width)
    cb = _progress("int-base") if verbose else None
    base, base_losses = train_base(dataset.motions, dataset.styles, config,
                                   base_steps, seed, schedule=schedule,
                                   settings=settings, callback=cb)
    builder = SceneBatchBuilder(mode="object", object_bps=dataset.object_bps,
                                basis_offsets=dataset.basis_offsets,
                                basis_centers=dataset.basis_centers)
    cb = _progress("int-control") if verbose else None
    tuned, ft_losses = finetune_control(base, dataset.motions, dataset.styles,
                                        builder, control_steps, seed + 1,
                                        schedule=schedule, settings=settings,
                                        interaction_mask=mask, callback=cb)
    return base, tuned, {"base_losses": base_losses, "control_losses": ft_losses}


def sit_case(seed: int) -> tuple[Scene, SceneObject, BodyPose]:
    """One held-out sit case: a chair in a small empty room, start nearby."""
    rng = np.random.default_rng(77_000 + seed)
    chair = chair_for_seed(rng)
    from .geometry import rasterize_floor
    floor = rasterize_floor((-3.0, -3.0), (3.0, 3.0), [chair], cell=0.05)
    scene = Scene(floor=floor, objects=(chair,))
    # standing start 1-1.8 m out, inside the interaction radius
    fx, fz = chair.forward
    dist = rng.uniform(1.0, 1.8)
    ang = rng.uniform(-0.6, 0.6)
    ca, sa = np.cos(ang), np.sin(ang)
    dx, dz = ca * fx + sa * fz, -sa * fx + ca * fz
    sx = chair.position[0] + dist * dx
    sz = chair.position[2] + dist * dz
    theta = np.arctan2(chair.position[0] - sx, chair.position[2] - sz)
    start_root = RootPose(sx, 0.9, sz, float(np.cos(theta)), float(np.sin(theta)))
    from .datasynth.walker import build_world_joints, assemble_body_frames
    frames = np.tile(start_root.as_vector(), (2, 1))
    joints = build_world_joints(frames)
    body = assemble_body_frames(frames, joints)
    return scene, chair, decode_pose_vector(body[0])


def interaction_guidance_experiment(params: DenoiserParams,
                                    schedule: DiffusionSchedule,
                                    n_cases: int = 20, sdf_weight: float = 10.0,
                                    horizon: int = 120) -> dict:
    """Penetration with vs without SDF guidance on held-out sit cases."""
    pen_off, pen_on = [], []
    endpoint_ok = True
    for i in range(n_cases):
        scene, chair, start = sit_case(i)
        goal = seat_pelvis_pose(chair)
        off = interact(scene, chair.id, start, params, schedule, goal=goal,
                       style_label="sit-down",
                       guidance=GuidanceConfig.interaction(sdf_weight=0.0,
                                                           goal_weight=1000.0),
                       seed=i, horizon=horizon)
        on = interact(scene, chair.id, start, params, schedule, goal=goal,
                      style_label="sit-down",
                      guidance=GuidanceConfig.interaction(sdf_weight=sdf_weight,
                                                          goal_weight=1000.0),
                      seed=i, horizon=horizon)
        from .pipeline.runner import transformed_chair
        vol = voxelize_box_union(chair.boxes(), center=np.asarray(chair.position),
                                 cell=0.05)
        pen_off.append(penetration(off.body, vol)[1])
        pen_on.append(penetration(on.body, vol)[1])
        for res in (off, on):
            if not np.array_equal(res.body.frames[-1, :5], goal.as_vector()):
                endpoint_ok = False
            if not np.array_equal(res.body.frames[0],
                                  np.asarray(_encode(start))):
                endpoint_ok = False
    return {"penetration_unguided": float(np.mean(pen_off)),
            "penetration_guided": float(np.mean(pen_on)),
            "endpoint_equality": endpoint_ok}


def _encode(pose: BodyPose) -> np.ndarray:
    from .core import encode_pose_vector
    return encode_pose_vector(pose)
