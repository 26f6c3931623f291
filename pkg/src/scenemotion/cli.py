"""Command-line interface: data synthesis, training, sampling, eval, serving."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _parse_pose(text: str, default_y: float = 0.9):
    from .core import RootPose
    parts = [float(p) for p in text.split(",")]
    if len(parts) < 2:
        raise SystemExit(f"pose {text!r} needs at least x,z")
    x, z = parts[0], parts[1]
    theta = parts[2] if len(parts) > 2 else 0.0
    y = parts[3] if len(parts) > 3 else default_y
    return RootPose(x, y, z, float(np.cos(theta)), float(np.sin(theta)))


def _parse_guidance(text: str | None, kind: str):
    from .sampler import GuidanceConfig
    base = GuidanceConfig.interaction() if kind == "interact" else GuidanceConfig.navigation()
    if not text:
        return base
    vals = {}
    for part in text.split(","):
        key, _, num = part.partition("=")
        vals[key.strip()] = float(num)
    return GuidanceConfig(
        goal_weight=vals.get("goal", base.goal_weight),
        collision_weight=vals.get("collision", base.collision_weight),
        sdf_weight=vals.get("sdf", base.sdf_weight))


def cmd_gen_data(args):
    from .datasynth import CorpusConfig, build_corpus
    cfg = CorpusConfig(seed=args.seed, n_motions=args.motions, n_scenes=args.scenes,
                       pairs_per_motion=args.pairs_per_motion, mirror=args.mirror)
    result = build_corpus(cfg, args.out)
    print(json.dumps(result.stats, sort_keys=True))


def cmd_train(args):
    from .denoiser import TrainSettings, save_checkpoint, train_base
    from .experiments import (
        INT_CONFIG, NAV_CONFIG, build_interaction_dataset, nav_training_data,
    )
    from .datasynth import load_corpus
    settings = TrainSettings(batch_size=args.batch_size, lr=args.lr)
    if args.kind == "nav":
        corpus = load_corpus(args.data)
        motions, styles, _ = nav_training_data(corpus)
        cfg = _sized_config(NAV_CONFIG, args)
        params, losses = train_base(motions, styles, cfg, args.steps, args.seed,
                                    settings=settings, callback=_log_cb(args))
    else:
        ds = build_interaction_dataset(n_items=args.items, seed=args.seed)
        cfg = _sized_config(INT_CONFIG, args)
        params, losses = train_base(ds.motions, ds.styles, cfg, args.steps,
                                    args.seed, settings=settings, callback=_log_cb(args))
    save_checkpoint(args.out, params)
    print(json.dumps({"checkpoint": str(args.out), "final_loss": float(losses[-1])},
                     sort_keys=True))


def _sized_config(base_cfg, args):
    from dataclasses import replace
    kw = {}
    if args.width:
        kw["model_width"] = args.width
        kw["ffn_width"] = 2 * args.width
    if args.layers:
        kw["layers"] = args.layers
    return replace(base_cfg, **kw) if kw else base_cfg


def _log_cb(args):
    if not args.verbose:
        return None

    def cb(step, loss):
        print(f"step {step} loss {loss:.4f}", file=sys.stderr)
    return cb


def cmd_finetune(args):
    from .denoiser import SceneBatchBuilder, TrainSettings, finetune_control, load_checkpoint, save_checkpoint
    from .experiments import build_interaction_dataset, nav_training_data
    from .datasynth import load_corpus
    from .sampler.masking import interaction_goal_mask
    base = load_checkpoint(args.base)
    settings = TrainSettings(batch_size=args.batch_size, lr=args.lr)
    if args.kind == "nav":
        corpus = load_corpus(args.data)
        motions, styles, floors = nav_training_data(corpus)
        builder = SceneBatchBuilder(mode="floor", floors=floors)
        params, losses = finetune_control(base, motions, styles, builder,
                                          args.steps, args.seed, settings=settings,
                                          callback=_log_cb(args))
    else:
        ds = build_interaction_dataset(n_items=args.items, seed=args.data_seed)
        builder = SceneBatchBuilder(mode="object", object_bps=ds.object_bps,
                                    basis_offsets=ds.basis_offsets,
                                    basis_centers=ds.basis_centers)
        mask = interaction_goal_mask(base.config.max_frames, base.config.pose_width)
        params, losses = finetune_control(base, ds.motions, ds.styles, builder,
                                          args.steps, args.seed, settings=settings,
                                          interaction_mask=mask, callback=_log_cb(args))
    save_checkpoint(args.out, params)
    print(json.dumps({"checkpoint": str(args.out), "final_loss": float(losses[-1])},
                     sort_keys=True))


def cmd_sample(args):
    from .core import save_motion
    from .denoiser import load_checkpoint
    from .geometry import load_scene
    from .pipeline import KinematicLifter, NavigationRequest, navigate
    from .sampler import BlendSpec, cosine_schedule
    params = load_checkpoint(args.checkpoint)
    scene = load_scene(args.scene)
    blend = None
    if args.blend_path:
        path = np.asarray(json.loads(Path(args.blend_path).read_text()), dtype=float)
        blend = BlendSpec(path, args.blend_scale)
    req = NavigationRequest(
        scene=scene, start=_parse_pose(args.start),
        goal=_parse_pose(args.goal) if args.goal else None,
        target_object=args.target_object, style_label=args.style,
        guidance=_parse_guidance(args.guidance, "navigate"),
        blend=blend, seed=args.seed, horizon=params.config.max_frames)
    lifter = KinematicLifter() if args.lift_out else None
    res = navigate(req, params, cosine_schedule(args.steps), lifter=lifter)
    save_motion(args.out, res.trajectory)
    if args.lift_out:
        save_motion(args.lift_out, res.body)
    print(json.dumps({"out": str(args.out),
                      "goal": [res.goal.x, res.goal.y, res.goal.z]}, sort_keys=True))


def cmd_eval(args):
    from .core import BodyMotion, load_motion
    from .eval import (
        aggregate_report, collision_ratio, foot_skate_ratio, goal_errors,
        render_table,
    )
    from .geometry import distance_transform, load_scene
    motion = load_motion(args.motion)
    case: dict = {}
    if args.scene:
        scene = load_scene(args.scene)
        case["collision_ratio"] = collision_ratio(motion, distance_transform(scene.floor))
    if args.goal:
        goal = _parse_pose(args.goal)
        pos, orient, height = goal_errors(motion, goal)
        case.update(goal_pos_err=pos, goal_orient_err=orient, goal_height_err=height)
    if isinstance(motion, BodyMotion):
        case["foot_skate_ratio"] = foot_skate_ratio(motion)
    report = aggregate_report([case])
    payload = json.dumps(report.to_json(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload)
    print(payload)
    print(render_table({"motion": report}), file=sys.stderr)


def cmd_run(args):
    from .core import RootPose, save_motion
    from .denoiser import load_checkpoint
    from .geometry import load_scene
    from .pipeline import ChainAction, chain
    from .sampler import cosine_schedule
    script = json.loads(Path(args.script).read_text())
    scene = load_scene(script["scene"])
    nav = load_checkpoint(args.checkpoint)
    intp = load_checkpoint(args.interaction_checkpoint) if args.interaction_checkpoint else None
    actions = [
        ChainAction(kind=a["kind"], style_label=a.get("style", "walk"),
                    target_object=a.get("object"),
                    goal=_parse_pose(a["goal"]) if a.get("goal") else None,
                    seed=int(a.get("seed", 0)))
        for a in script["actions"]
    ]
    start = _parse_pose(script["start"])
    sched = cosine_schedule(args.steps)
    result = chain(scene, actions, start, nav, sched, int_params=intp,
                   int_schedule=sched,
                   nav_horizon=nav.config.max_frames,
                   int_horizon=intp.config.max_frames if intp else 120)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, stage in enumerate(result.motions):
        motion = getattr(stage, "body", None) or getattr(stage, "trajectory")
        path = out / f"stage{i:02d}.smot"
        save_motion(path, motion)
        written.append(str(path))
    print(json.dumps({"completed": result.completed, "error": result.error,
                      "stages": written}, sort_keys=True))
    if not result.completed:
        raise SystemExit(1)


def cmd_serve(args):
    import os
    from .service import serve
    # flags win; environment variables cover deployments without a wrapper
    checkpoint = args.checkpoint or os.environ.get("SCENEMOTION_CHECKPOINT")
    if not checkpoint:
        raise SystemExit("serve needs --checkpoint or SCENEMOTION_CHECKPOINT")
    serve(checkpoint,
          port=args.port or int(os.environ.get("SCENEMOTION_PORT", "8080")),
          data_dir=args.data_dir or os.environ.get("SCENEMOTION_DATA_DIR", "service-data"),
          interaction_checkpoint=(args.interaction_checkpoint
                                  or os.environ.get("SCENEMOTION_INTERACTION_CHECKPOINT")),
          workers=args.workers, studio_dir=args.studio, host=args.host)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenemotion")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="build a synthetic locomotion-scene corpus")
    g.add_argument("--scenes", type=int, default=24)
    g.add_argument("--motions", type=int, default=200)
    g.add_argument("--pairs-per-motion", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--mirror", action=argparse.BooleanOptionalAction, default=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a base denoiser")
    t.add_argument("--kind", choices=("nav", "interaction"), default="nav")
    t.add_argument("--data", help="corpus directory (nav)")
    t.add_argument("--items", type=int, default=256, help="interaction clips")
    t.add_argument("--steps", type=int, default=20000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--width", type=int, default=0)
    t.add_argument("--layers", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--verbose", action="store_true")
    t.set_defaults(func=cmd_train)

    f = sub.add_parser("finetune", help="fine-tune the scene-aware control branch")
    f.add_argument("--kind", choices=("nav", "interaction"), default="nav")
    f.add_argument("--base", required=True)
    f.add_argument("--data", help="corpus directory (nav)")
    f.add_argument("--items", type=int, default=256)
    f.add_argument("--data-seed", type=int, default=0)
    f.add_argument("--steps", type=int, default=5000)
    f.add_argument("--seed", type=int, default=1)
    f.add_argument("--batch-size", type=int, default=32)
    f.add_argument("--lr", type=float, default=1e-4)
    f.add_argument("--out", required=True)
    f.add_argument("--verbose", action="store_true")
    f.set_defaults(func=cmd_finetune)

    s = sub.add_parser("sample", help="sample a navigation trajectory")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--scene", required=True)
    s.add_argument("--start", required=True, help="x,z[,theta[,y]]")
    s.add_argument("--goal", help="x,z[,theta[,y]]")
    s.add_argument("--target-object")
    s.add_argument("--style", default="walk")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int, default=100, help="denoising steps")
    s.add_argument("--guidance", help="goal=30,collision=1000")
    s.add_argument("--blend-path", help="JSON file with [[x,z],...]")
    s.add_argument("--blend-scale", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.add_argument("--lift-out", help="also write the lifted body motion here")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("eval", help="evaluate a stored motion")
    e.add_argument("--motion", required=True)
    e.add_argument("--scene")
    e.add_argument("--goal", help="x,z[,theta[,y]]")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("run", help="run a JSON action script")
    r.add_argument("--script", required=True)
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--interaction-checkpoint")
    r.add_argument("--steps", type=int, default=100)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("serve", help="start the HTTP service")
    v.add_argument("--checkpoint", help="or SCENEMOTION_CHECKPOINT")
    v.add_argument("--interaction-checkpoint")
    v.add_argument("--port", type=int, default=0, help="or SCENEMOTION_PORT")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--data-dir", default="", help="or SCENEMOTION_DATA_DIR")
    v.add_argument("--workers", type=int, default=2)
    v.add_argument("--studio", help="static studio assets directory")
    v.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
