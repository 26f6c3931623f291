"""HTTP service: scenes, generation runs and metrics over JSON (/v1)."""

from __future__ import annotations

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles

from ..core import RootPose, decode_pose_vector
from ..datasynth import generate_scene
from ..denoiser import DenoiserParams, load_checkpoint
from ..errors import SceneMotionError, ValidationError
from ..eval import collision_ratio, foot_skate_ratio, goal_errors
from ..geometry import scene_from_json, scene_to_json
from ..pipeline import KinematicLifter, NavigationRequest, interact, navigate
from ..sampler import BlendSpec, DiffusionSchedule, GuidanceConfig, cosine_schedule
from .store import RunStore, SceneStore

log = logging.getLogger(__name__)


def _pose_from_json(d: dict) -> RootPose:
    return RootPose(float(d["x"]), float(d.get("y", 0.9)), float(d["z"]),
                    float(d.get("cos_h", 1.0)), float(d.get("sin_h", 0.0)))


def _pose_to_json(p: RootPose) -> dict:
    return {"x": p.x, "y": p.y, "z": p.z, "cos_h": p.cos_h, "sin_h": p.sin_h}


def _guidance_from_json(d: dict | None, kind: str) -> GuidanceConfig:
    if kind == "interact":
        default = GuidanceConfig.interaction()
    else:
        default = GuidanceConfig.navigation()
    if not d:
        return default
    return GuidanceConfig(
        goal_weight=float(d.get("goal", default.goal_weight)),
        collision_weight=float(d.get("collision", default.collision_weight)),
        sdf_weight=float(d.get("sdf", default.sdf_weight)),
        skip_final_step=bool(d.get("skip_final_step", True)))


def create_app(nav_params: DenoiserParams | None = None,
               int_params: DenoiserParams | None = None,
               schedule: DiffusionSchedule | None = None,
               data_dir: str | Path = "service-data",
               workers: int = 2,
               studio_dir: str | Path | None = None) -> FastAPI:
    """Build the service with a loaded checkpoint shared across workers."""
    app = FastAPI(title="scenemotion", version="0.1.0")
    data_dir = Path(data_dir)
    scenes = SceneStore(data_dir / "scenes")
    runs = RunStore(data_dir / "runs")
    pool = ThreadPoolExecutor(max_workers=workers)
    sched = schedule if schedule is not None else cosine_schedule()
    lifter = KinematicLifter()
    from ..geometry import VolumeCache
    volumes = VolumeCache(data_dir / "sdf_cache")

    @app.post("/v1/scenes")
    def post_scene(body: dict):
        try:
            if "floor" in body:
                scene = scene_from_json(body)
            else:
                _, scene = generate_scene(int(body.get("seed", 0)),
                                          float(body.get("difficulty", 0.5)),
                                          with_chair=bool(body.get("with_chair", True)))
        except (SceneMotionError, KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"scene_id": scenes.put(scene)}

    @app.get("/v1/scenes")
    def list_scenes():
        return {"scenes": scenes.ids()}

    @app.get("/v1/scenes/{sid}")
    def get_scene(sid: str):
        try:
            return scene_to_json(scenes.get(sid))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no scene {sid}")

    @app.get("/v1/scenes/{sid}/floormap.png")
    def get_floormap(sid: str):
        from PIL import Image
        try:
            scene = scenes.get(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no scene {sid}")
        walk = scene.floor.walkable
        img = Image.fromarray((walk.T.astype(np.uint8)) * 255, mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    def _execute(run_id: str):
        rec = runs.get(run_id)
        req = rec.request
        runs.transition(run_id, "running")
        try:
            scene = scenes.get(req["scene"])
            kind = req.get("kind", "navigate")
            seed = int(req.get("seed", 0))
            guidance = _guidance_from_json(req.get("guidance"), kind)
            if kind == "navigate":
                if nav_params is None:
                    raise SceneMotionError("no navigation checkpoint loaded")
                blend = None
                if req.get("blend"):
                    blend = BlendSpec(np.asarray(req["blend"]["path"], dtype=float),
                                      float(req["blend"]["scale"]))
                nav_req = NavigationRequest(
                    scene=scene, start=_pose_from_json(req["start"]),
                    goal=_pose_from_json(req["goal"]) if req.get("goal") else None,
                    target_object=req.get("target_object"),
                    style_label=req.get("style", "walk"), guidance=guidance,
                    blend=blend, seed=seed,
                    horizon=int(req.get("horizon", nav_params.config.max_frames)))
                res = navigate(nav_req, nav_params, sched, lifter=lifter)
                field = scene.distance_field()
                pos, orient, height = goal_errors(res.trajectory, res.goal)
                metrics = {
                    "goal_pos_err": pos, "goal_orient_err": orient,
                    "goal_height_err": height,
                    "collision_ratio": collision_ratio(res.trajectory, field),
                    "foot_skate_ratio": foot_skate_ratio(res.body),
                }
                result = {
                    "kind": "navigate",
                    "frame_rate": res.trajectory.frame_rate,
                    "frames": res.trajectory.frames.tolist(),
                    "raw_frames": res.raw_frames.tolist(),
                    "goal": _pose_to_json(res.goal),
                    "snapshots": [{"step": int(t), "frames": f[:, [0, 2]].tolist()}
                                  for t, f in res.snapshots],
                }
            elif kind == "interact":
                if int_params is None:
                    raise SceneMotionError("no interaction checkpoint loaded")
                start = req["start_body"]
                body_pose = decode_pose_vector(np.asarray(start, dtype=float))
                res = interact(scene, req["target_object"], body_pose,
                               int_params, sched,
                               goal=_pose_from_json(req["goal"]) if req.get("goal") else None,
                               style_label=req.get("style", "sit-down"),
                               guidance=guidance, seed=seed,
                               horizon=int(req.get("horizon", int_params.config.max_frames)),
                               volume_cache=volumes)
                pos, orient, height = goal_errors(res.body.root_trajectory(), res.goal)
                metrics = {"goal_pos_err": pos, "goal_orient_err": orient,
                           "goal_height_err": height,
                           "foot_skate_ratio": foot_skate_ratio(res.body)}
                result = {
                    "kind": "interact",
                    "frame_rate": res.body.frame_rate,
                    "frames": res.body.frames.tolist(),
                    "goal": _pose_to_json(res.goal),
                    "snapshots": [{"step": int(t), "frames": f[:, [0, 2]].tolist()}
                                  for t, f in res.snapshots],
                }
            else:
                raise ValidationError(f"unknown request kind {kind!r}")
            runs.transition(run_id, "done", result=result, metrics=metrics)
        except Exception as exc:  # noqa: BLE001 - failures land in the record
            log.exception("run %s failed", run_id)
            runs.transition(run_id, "failed", error=str(exc))

    @app.post("/v1/generate")
    def post_generate(body: dict):
        if "scene" not in body:
            raise HTTPException(status_code=400, detail="request needs a scene id")
        kind = body.get("kind", "navigate")
        if kind == "navigate" and "start" not in body:
            raise HTTPException(status_code=400, detail="navigate needs a start pose")
        if kind == "navigate" and not (body.get("goal") or body.get("target_object")):
            raise HTTPException(status_code=400, detail="navigate needs goal or target_object")
        try:
            scenes.get(body["scene"])
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no scene {body['scene']}")
        rec = runs.create(body)
        pool.submit(_execute, rec.run_id)
        return {"run_id": rec.run_id}

    def _get_run(run_id: str):
        try:
            return runs.get(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no run {run_id}")

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        return _get_run(run_id).to_json(with_result=False)

    @app.get("/v1/runs/{run_id}/trajectory.json")
    def get_trajectory(run_id: str):
        rec = _get_run(run_id)
        if rec.status != "done":
            raise HTTPException(status_code=404, detail=f"run is {rec.status}")
        return rec.result

    @app.get("/v1/runs/{run_id}/metrics")
    def get_metrics(run_id: str):
        rec = _get_run(run_id)
        if rec.status != "done":
            raise HTTPException(status_code=404, detail=f"run is {rec.status}")
        return rec.metrics

    if studio_dir is not None and Path(studio_dir).exists():
        app.mount("/studio", StaticFiles(directory=studio_dir, html=True), name="studio")

    return app


def serve(checkpoint: str, port: int = 8080, data_dir: str = "service-data",
          interaction_checkpoint: str | None = None, workers: int = 2,
          studio_dir: str | None = None, host: str = "127.0.0.1"):
    import uvicorn
    nav = load_checkpoint(checkpoint) if checkpoint else None
    intp = load_checkpoint(interaction_checkpoint) if interaction_checkpoint else None
    app = create_app(nav_params=nav, int_params=intp, data_dir=data_dir,
                     workers=workers, studio_dir=studio_dir)
    uvicorn.run(app, host=host, port=port)
