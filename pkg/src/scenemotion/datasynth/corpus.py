"""Paired (motion, scene, placement, style) corpus construction.

Motions and scenes are stored content-addressed; the manifest is JSON-lines
with one record per pair, split train/val/test by base scene so mirrored
copies never leak across splits.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import (
    RigidTransform2D, RootTrajectory, load_motion, motion_to_bytes,
)
from ..errors import SceneMotionError
from ..geometry import FloorMap, Scene, distance_transform, load_scene, scene_id
from .locomotion import generate_locomotion
from .placement import (
    mirror_style_label, mirror_trajectory, mirror_transform, place_motion,
)
from .scenes import generate_scene, mirror_scene

log = logging.getLogger(__name__)

COND_CELL = 0.1  # coarse conditioning grid resolution, meters


@dataclass(frozen=True)
class CorpusConfig:
    seed: int = 0
    n_motions: int = 200
    n_scenes: int = 24
    pairs_per_motion: int = 5
    mirror: bool = True
    clearance: float = 0.1
    difficulty: tuple[float, float] = (0.4, 0.9)
    horizon: int = 100
    frame_rate: float = 20.0
    styles: tuple[str, ...] = ("walk", "walk-fast", "tiptoe")
    val_fraction: float = 0.15
    test_fraction: float = 0.15


@dataclass
class CorpusResult:
    directory: Path
    records: list[dict]
    stats: dict = field(default_factory=dict)

    @property
    def manifest_path(self) -> Path:
        return self.directory / "manifest.jsonl"


def canonical_floor_grid(floor: FloorMap, world_from_canon: RigidTransform2D,
                         traj_frames: np.ndarray, cell: float = COND_CELL,
                         margin: float = 2.0):
    """Resample a scene's walkability into a motion's canonical frame.

    Every coarse cell center maps through the placement transform and reads
    the nearest fine cell (outside the scene counts as blocked). Returns
    (grid float32, origin, cell) for the control branch.
    """
    lo = traj_frames[:, [0, 2]].min(axis=0) - margin
    hi = traj_frames[:, [0, 2]].max(axis=0) + margin
    w = max(int(np.ceil((hi[0] - lo[0]) / cell)), 2)
    h = max(int(np.ceil((hi[1] - lo[1]) / cell)), 2)
    xs = lo[0] + (np.arange(w) + 0.5) * cell
    zs = lo[1] + (np.arange(h) + 0.5) * cell
    cx, cz = np.meshgrid(xs, zs, indexing="ij")
    pts = np.stack([cx.ravel(), cz.ravel()], axis=1)
    world = world_from_canon.apply_xz(pts)
    ix = np.floor((world[:, 0] - floor.origin[0]) / floor.cell).astype(int)
    iz = np.floor((world[:, 1] - floor.origin[1]) / floor.cell).astype(int)
    ok = (ix >= 0) & (ix < floor.width) & (iz >= 0) & (iz < floor.height)
    grid = np.zeros(w * h, dtype=np.float32)
    grid[ok] = floor.walkable[ix[ok], iz[ok]].astype(np.float32)
    return grid.reshape(w, h), (float(lo[0]), float(lo[1])), cell


def _content_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _splits(base_ids: list[str], cfg: CorpusConfig) -> dict[str, str]:
    ordered = sorted(base_ids)
    n = len(ordered)
    n_test = max(1, int(round(cfg.test_fraction * n)))
    n_val = max(1, int(round(cfg.val_fraction * n)))
    split = {}
    for i, sid in enumerate(ordered):
        if i < n_test:
            split[sid] = "test"
        elif i < n_test + n_val:
            split[sid] = "val"
        else:
            split[sid] = "train"
    return split


def build_corpus(cfg: CorpusConfig, out_dir) -> CorpusResult:
    """Generate and store the full paired corpus; pure function of cfg.seed."""
    out = Path(out_dir)
    (out / "motions").mkdir(parents=True, exist_ok=True)
    (out / "scenes").mkdir(parents=True, exist_ok=True)

    # scenes (+ mirrored twins sharing the base split)
    rng = np.random.default_rng(cfg.seed)
    scenes: dict[str, Scene] = {}
    base_of: dict[str, str] = {}
    base_ids = []
    for i in range(cfg.n_scenes):
        difficulty = float(rng.uniform(*cfg.difficulty))
        _, scene = generate_scene(cfg.seed * 1000 + i, difficulty)
        sid = scene_id(scene)
        scenes[sid] = scene
        base_of[sid] = sid
        base_ids.append(sid)
        if cfg.mirror:
            m = mirror_scene(scene)
            mid = scene_id(m)
            scenes[mid] = m
            base_of[mid] = sid
    split_of_base = _splits(base_ids, cfg)

    from ..geometry import canonical_scene_bytes
    for sid, scene in scenes.items():
        (out / "scenes" / f"{sid}.json").write_bytes(canonical_scene_bytes(scene))

    fields = {sid: distance_transform(s.floor) for sid, s in scenes.items()}

    # canonical motions
    motions: dict[str, RootTrajectory] = {}
    motion_styles: dict[str, str] = {}
    motion_order = []
    for i in range(cfg.n_motions):
        style = cfg.styles[i % len(cfg.styles)]
        traj = generate_locomotion(cfg.seed * 7000 + i, style, n=cfg.horizon,
                                   frame_rate=cfg.frame_rate)
        data = motion_to_bytes(traj)
        mid = _content_id(data)
        (out / "motions" / f"{mid}.smot").write_bytes(data)
        motions[mid] = traj
        motion_styles[mid] = style
        motion_order.append(mid)

    # placements
    records = []
    attempts = 0
    rejections = 0
    scene_list = [sid for sid in scenes if base_of[sid] == sid]
    for i, mid in enumerate(motion_order):
        traj = motions[mid]
        placed = 0
        tries = 0
        while placed < cfg.pairs_per_motion and tries < cfg.pairs_per_motion * 8:
            sid = scene_list[int(rng.integers(0, len(scene_list)))]
            t = place_motion(traj, scenes[sid].floor, int(rng.integers(0, 2 ** 31)),
                             clearance=cfg.clearance, max_tries=25, field=fields[sid])
            tries += 1
            attempts += 1
            if t is None:
                rejections += 1
                continue
            placed += 1
            rec = {
                "pair_id": f"{mid}:{sid}:{placed}",
                "motion": mid, "scene": sid, "mirrored": False,
                "transform": {"tx": t.tx, "tz": t.tz, "cos": t.cos_r, "sin": t.sin_r},
                "style": motion_styles[mid],
                "split": split_of_base[base_of[sid]],
            }
            records.append(rec)
            if cfg.mirror:
                mt = mirror_transform(t)
                m_scene = mirror_scene(scenes[sid])
                msid = scene_id(m_scene)
                mtraj = mirror_trajectory(traj)
                mdata = motion_to_bytes(mtraj)
                mmid = _content_id(mdata)
                if not (out / "motions" / f"{mmid}.smot").exists():
                    (out / "motions" / f"{mmid}.smot").write_bytes(mdata)
                records.append({
                    "pair_id": f"{mmid}:{msid}:{placed}",
                    "motion": mmid, "scene": msid, "mirrored": True,
                    "transform": {"tx": mt.tx, "tz": mt.tz, "cos": mt.cos_r, "sin": mt.sin_r},
                    "style": mirror_style_label(motion_styles[mid]),
                    "split": split_of_base[base_of[msid]],
                })

    stats = {
        "pairs": len(records), "attempts": attempts, "rejections": rejections,
        "scenes": len(scenes), "motions": len(set(r["motion"] for r in records)),
    }
    if len(records) < cfg.n_motions * cfg.pairs_per_motion // 2:
        log.warning("corpus sparse: %s", stats)

    lines = [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in records]
    manifest = "\n".join(lines) + "\n"
    (out / "manifest.jsonl").write_text(manifest)
    meta = {
        "config": {
            "seed": cfg.seed, "n_motions": cfg.n_motions, "n_scenes": cfg.n_scenes,
            "pairs_per_motion": cfg.pairs_per_motion, "mirror": cfg.mirror,
            "clearance": cfg.clearance, "difficulty": list(cfg.difficulty),
            "horizon": cfg.horizon, "frame_rate": cfg.frame_rate,
            "styles": list(cfg.styles),
        },
        "stats": stats,
        "manifest_sha256": hashlib.sha256(manifest.encode()).hexdigest(),
    }
    (out / "corpus.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return CorpusResult(directory=out, records=records, stats=stats)


def load_corpus(directory) -> CorpusResult:
    out = Path(directory)
    records = [json.loads(line) for line in
               (out / "manifest.jsonl").read_text().splitlines() if line]
    stats = json.loads((out / "corpus.json").read_text())["stats"]
    return CorpusResult(directory=out, records=records, stats=stats)


def corpus_motion(result: CorpusResult, motion_id: str) -> RootTrajectory:
    m = load_motion(result.directory / "motions" / f"{motion_id}.smot")
    if not isinstance(m, RootTrajectory):
        raise SceneMotionError(f"{motion_id} is not a root trajectory")
    return m


def corpus_scene(result: CorpusResult, sid: str) -> Scene:
    return load_scene(result.directory / "scenes" / f"{sid}.json")
