import numpy as np
import pytest

from scenemotion.core import RootTrajectory, joints_world
from scenemotion.datasynth import (
    CorpusConfig, build_corpus, build_world_joints, canonical_floor_grid,
    generate_interaction, generate_locomotion, generate_scene,
    lift_trajectory, load_corpus, mirror_motion, mirror_scene,
    mirror_style_label, mirror_trajectory, place_motion,
    placement_collision_free, reverse_motion, seat_pelvis_pose,
    walkable_connected,
)
from scenemotion.errors import ValidationError
from scenemotion.geometry import SceneObject, distance_transform, query_field_many


def flood_fill_components(walk):
    """Oracle: count 8-connected walkable components by BFS."""
    seen = np.zeros_like(walk, dtype=bool)
    comps = 0
    w, h = walk.shape
    for i in range(w):
        for j in range(h):
            if walk[i, j] and not seen[i, j]:
                comps += 1
                stack = [(i, j)]
                seen[i, j] = True
                while stack:
                    a, b = stack.pop()
                    for da in (-1, 0, 1):
                        for db in (-1, 0, 1):
                            na, nb = a + da, b + db
                            if 0 <= na < w and 0 <= nb < h and walk[na, nb] and not seen[na, nb]:
                                seen[na, nb] = True
                                stack.append((na, nb))
    return comps


class TestGenerateScene:
    def test_zero_difficulty_no_obstacles(self):
        spec, scene = generate_scene(3, difficulty=0.0)
        assert len([o for o in scene.objects if o.category == "obstacle"]) == 0
        # every cell whose center lies inside the room is walkable
        f = scene.floor
        xs = f.origin[0] + (np.arange(f.width) + 0.5) * f.cell
        zs = f.origin[1] + (np.arange(f.height) + 0.5) * f.cell
        inside = ((xs[:, None] >= spec.room_min[0]) & (xs[:, None] <= spec.room_max[0])
                  & (zs[None, :] >= spec.room_min[1]) & (zs[None, :] <= spec.room_max[1]))
        assert f.walkable[inside].all()

    def test_deterministic_per_seed(self):
        _, a = generate_scene(5, 0.7)
        _, b = generate_scene(5, 0.7)
        from scenemotion.geometry import scene_id
        assert scene_id(a) == scene_id(b)

    def test_connectivity_matches_flood_fill_oracle(self):
        for seed in range(6):
            _, scene = generate_scene(seed, 0.8)
            assert walkable_connected(scene.floor)
            assert flood_fill_components(scene.floor.walkable) == 1

    def test_room_size_and_obstacle_count(self):
        for seed in range(4):
            spec, scene = generate_scene(seed + 10, 0.6)
            w = spec.room_max[0] - spec.room_min[0]
            d = spec.room_max[1] - spec.room_min[1]
            assert 4.0 <= w <= 10.0 and 4.0 <= d <= 10.0
            n_obs = len([o for o in spec.objects if o.category == "obstacle"])
            assert 2 <= n_obs <= 8


class TestLocomotion:
    def test_walk_speed_range(self):
        for seed in range(5):
            traj = generate_locomotion(seed, "walk")
            seg = np.linalg.norm(np.diff(traj.frames[:, [0, 2]], axis=0), axis=1)
            speed = seg.sum() / (len(traj) - 1) * traj.frame_rate
            assert 1.0 <= speed <= 1.4

    def test_fast_and_tiptoe_params(self):
        fast = generate_locomotion(1, "walk-fast")
        tip = generate_locomotion(1, "tiptoe")
        seg_f = np.linalg.norm(np.diff(fast.frames[:, [0, 2]], axis=0), axis=1).sum()
        seg_t = np.linalg.norm(np.diff(tip.frames[:, [0, 2]], axis=0), axis=1).sum()
        assert seg_f > seg_t
        assert tip.frames[:, 1].mean() > fast.frames[:, 1].mean()

    def test_heading_tangent_to_path(self):
        # finite-difference tangent oracle, away from the endpoints
        traj = generate_locomotion(7, "walk")
        f = traj.frames
        tangent = np.gradient(f[:, [0, 2]], axis=0)
        ang_t = np.arctan2(tangent[:, 0], tangent[:, 1])
        ang_h = np.arctan2(f[:, 4], f[:, 3])
        diff = np.abs(np.arctan2(np.sin(ang_t - ang_h), np.cos(ang_t - ang_h)))
        assert np.max(diff[3:-3]) < np.deg2rad(5.0)

    def test_canonical_and_reproducible(self):
        a = generate_locomotion(9, "walk")
        b = generate_locomotion(9, "walk")
        assert np.array_equal(a.frames, b.frames)
        assert a.frames[0, 0] == 0.0 and a.frames[0, 2] == 0.0
        assert a.frames[0, 3] == pytest.approx(1.0) and abs(a.frames[0, 4]) < 1e-12

    def test_unknown_style(self):
        with pytest.raises(ValidationError):
            generate_locomotion(0, "moonwalk")


class TestPlacement:
    def test_empty_room_accepts(self):
        _, scene = generate_scene(1, 0.0)
        traj = generate_locomotion(2, "walk")
        t = place_motion(traj, scene.floor, seed=0, clearance=0.1)
        assert t is not None
        placed = t.apply_frames(traj.frames)
        field = distance_transform(scene.floor)
        vals, _ = query_field_many(field, placed[:, [0, 2]])
        assert np.all(vals <= -0.1)

    def test_oversized_trajectory_rejected(self):
        _, scene = generate_scene(1, 0.0)
        n = 50
        frames = np.zeros((n, 5))
        frames[:, 2] = np.linspace(0.0, 30.0, n)  # 30 m walk in a <=10 m room
        frames[:, 3] = 1.0
        t = place_motion(RootTrajectory(frames), scene.floor, seed=0, max_tries=30)
        assert t is None

    def test_acceptance_matches_per_frame_oracle(self):
        _, scene = generate_scene(4, 0.7)
        field = distance_transform(scene.floor)
        traj = generate_locomotion(3, "walk")
        from scenemotion.core import RigidTransform2D
        from scenemotion.geometry import query_field
        rng = np.random.default_rng(0)
        clearance = 0.1
        for _ in range(40):
            ang = rng.uniform(0, 2 * np.pi)
            t = RigidTransform2D(rng.uniform(-4, 4), rng.uniform(-4, 4),
                                 np.cos(ang), np.sin(ang))
            placed = t.apply_frames(traj.frames)
            fast = placement_collision_free(placed, field, clearance)
            slow = all(query_field(field, x, z)[0] <= -clearance
                       for x, z in placed[:, [0, 2]])
            assert fast == slow


class TestMirror:
    def test_trajectory_involution(self):
        traj = generate_locomotion(11, "walk")
        twice = mirror_trajectory(mirror_trajectory(traj))
        assert np.array_equal(twice.frames, traj.frames)

    def test_straight_walk_mirrors_to_minus_x(self):
        n = 20
        frames = np.zeros((n, 5))
        frames[:, 0] = np.linspace(0.0, 2.0, n)
        theta = np.pi / 2  # facing +x
        frames[:, 1] = 0.9
        frames[:, 3] = np.cos(theta)
        frames[:, 4] = np.sin(theta)
        m = mirror_trajectory(RootTrajectory(frames))
        assert np.allclose(m.frames[:, 0], -frames[:, 0])
        assert np.allclose(m.frames[:, 4], -frames[:, 4])

    def test_body_motion_involution(self):
        traj = generate_locomotion(13, "walk")
        motion = lift_trajectory(traj)
        twice = mirror_motion(mirror_motion(motion))
        assert np.array_equal(twice.frames, motion.frames)

    def test_scene_involution(self):
        _, scene = generate_scene(6, 0.6)
        twice = mirror_scene(mirror_scene(scene))
        assert np.array_equal(twice.floor.walkable, scene.floor.walkable)
        assert twice.floor.origin == scene.floor.origin
        for a, b in zip(twice.objects, scene.objects):
            assert a.position == b.position and a.yaw == b.yaw

    def test_mirrored_joints_are_reflections(self):
        traj = generate_locomotion(15, "walk")
        motion = lift_trajectory(traj)
        mirrored = mirror_motion(motion)
        j = joints_world(motion.frames)
        jm = joints_world(mirrored.frames)
        # left hip of the mirror equals reflected right hip of the original
        assert np.allclose(jm[:, 1, 0], -j[:, 2, 0], atol=1e-9)
        assert np.allclose(jm[:, 1, [1, 2]], j[:, 2, [1, 2]], atol=1e-9)

    def test_style_label_swap(self):
        assert mirror_style_label("turn-left") == "turn-right"
        assert mirror_style_label("walk") == "walk"


class TestWalker:
    def test_pelvis_tracks_trajectory_exactly(self):
        traj = generate_locomotion(17, "walk")
        motion = lift_trajectory(traj)
        assert np.array_equal(motion.frames[:, :5], traj.frames)
        joints = joints_world(motion.frames)
        assert np.allclose(joints[:, 0], traj.frames[:, 0:3])

    def test_stance_feet_do_not_slide(self):
        traj = generate_locomotion(19, "walk")
        joints = build_world_joints(traj.frames)
        toe = joints[:, 10]  # left toe
        low = toe[:, 1] < 0.05
        disp = np.linalg.norm(np.diff(toe[:, [0, 2]], axis=0), axis=1)
        sliding = (disp > 0.025) & low[:-1]
        assert sliding.mean() < 0.05

    def test_standing_still(self):
        n = 30
        frames = np.zeros((n, 5))
        frames[:, 1] = 0.9
        frames[:, 3] = 1.0
        joints = build_world_joints(frames)
        assert np.allclose(np.diff(joints, axis=0), 0.0, atol=1e-12)


class TestInteraction:
    def chair(self, yaw=0.3, seat_h=0.45):
        return SceneObject(id="c", kind="chair", position=(0.5, seat_h / 2, -0.2),
                           yaw=yaw, half_extents=(0.24, seat_h / 2, 0.22),
                           category="chair")

    def test_sit_down_reaches_seat_height(self):
        chair = self.chair()
        motion = generate_interaction(0, chair, "sit-down")
        final_y = motion.frames[-1, 1]
        assert abs(final_y - chair.seat_top) <= 0.05
        goal = seat_pelvis_pose(chair)
        assert motion.frames[-1, 0] == pytest.approx(goal.x, abs=1e-9)
        assert motion.frames[-1, 2] == pytest.approx(goal.z, abs=1e-9)

    def test_stand_up_reverses_sit(self):
        chair = self.chair()
        sit = generate_interaction(5, chair, "sit-down")
        stand = generate_interaction(5, chair, "stand-up")
        assert np.allclose(stand.frames[:, 0:5], sit.frames[::-1, 0:5], atol=1e-9)
        assert stand.frames[0, 1] == pytest.approx(sit.frames[-1, 1])

    def test_styles_have_opposite_height_trends(self):
        chair = self.chair()
        sit = generate_interaction(2, chair, "sit-down")
        stand = generate_interaction(2, chair, "stand-up")
        assert sit.frames[-1, 1] - sit.frames[0, 1] < -0.2
        assert stand.frames[-1, 1] - stand.frames[0, 1] > 0.2

    def test_rejects_non_chair(self):
        box = SceneObject(id="b", kind="box", position=(0, 0.3, 0),
                          half_extents=(0.3, 0.3, 0.3))
        with pytest.raises(ValidationError):
            generate_interaction(0, box, "sit-down")


class TestCorpus:
    def test_small_corpus(self, tmp_path):
        cfg = CorpusConfig(seed=1, n_motions=6, n_scenes=4, pairs_per_motion=2,
                           mirror=True)
        result = build_corpus(cfg, tmp_path / "corpus")
        assert result.stats["pairs"] > 0
        splits = {r["split"] for r in result.records}
        assert splits <= {"train", "val", "test"}
        # split disjointness by scene
        by_scene = {}
        for r in result.records:
            by_scene.setdefault(r["scene"], set()).add(r["split"])
        assert all(len(v) == 1 for v in by_scene.values())
        # reload round-trips
        loaded = load_corpus(tmp_path / "corpus")
        assert loaded.records == result.records

    def test_deterministic_manifest(self, tmp_path):
        cfg = CorpusConfig(seed=2, n_motions=4, n_scenes=3, pairs_per_motion=1)
        a = build_corpus(cfg, tmp_path / "a")
        b = build_corpus(cfg, tmp_path / "b")
        assert (a.directory / "manifest.jsonl").read_bytes() == \
               (b.directory / "manifest.jsonl").read_bytes()

    def test_mirrored_pairs_collision_free(self, tmp_path):
        from scenemotion.core import RigidTransform2D
        from scenemotion.datasynth import corpus_motion, corpus_scene
        cfg = CorpusConfig(seed=3, n_motions=4, n_scenes=3, pairs_per_motion=2)
        result = build_corpus(cfg, tmp_path / "c")
        mirrored = [r for r in result.records if r["mirrored"]][:6]
        assert mirrored
        for r in mirrored:
            traj = corpus_motion(result, r["motion"])
            scene = corpus_scene(result, r["scene"])
            t = RigidTransform2D(r["transform"]["tx"], r["transform"]["tz"],
                                 r["transform"]["cos"], r["transform"]["sin"])
            placed = t.apply_frames(traj.frames)
            field = distance_transform(scene.floor)
            assert placement_collision_free(placed, field, cfg.clearance)

    def test_canonical_floor_grid(self):
        from scenemotion.core import RigidTransform2D
        _, scene = generate_scene(8, 0.7)
        traj = generate_locomotion(1, "walk")
        t = place_motion(traj, scene.floor, seed=4, clearance=0.1)
        assert t is not None
        grid, origin, cell = canonical_floor_grid(scene.floor, t, traj.frames)
        # the trajectory passes through walkable cells of its own grid
        ix = np.floor((traj.frames[:, 0] - origin[0]) / cell).astype(int)
        iz = np.floor((traj.frames[:, 2] - origin[1]) / cell).astype(int)
        assert np.all(grid[ix, iz] > 0.5)


class TestInteractionApproach:
    def test_approach_path_collision_free(self):
        from scenemotion.geometry import Scene, rasterize_floor, query_field_many
        from scenemotion.datasynth import generate_interaction
        from scenemotion.geometry import SceneObject
        chair = SceneObject(id="c", kind="chair", position=(0.4, 0.22, -0.1),
                            yaw=0.5, half_extents=(0.24, 0.22, 0.22),
                            category="chair")
        floor = rasterize_floor((-3, -3), (3, 3), [chair], cell=0.05)
        from scenemotion.geometry import distance_transform
        field = distance_transform(floor)
        motion = generate_interaction(3, chair, "walk-then-sit")
        n = len(motion)
        walk_part = motion.frames[: int(0.55 * n), :]  # before the turn/sit
        vals, _ = query_field_many(field, walk_part[:, [0, 2]])
        assert np.all(vals <= 0.0)
