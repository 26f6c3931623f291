import numpy as np
import pytest

from scenemotion.core import (
    ABS_SLICE, BODY_WIDTH, JOINT_POS_SLICE, BodyMotion, RigidTransform2D,
    RootPose, RootTrajectory, default_skeleton,
)
from scenemotion.datasynth import generate_locomotion, generate_scene, lift_trajectory
from scenemotion.errors import ValidationError
from scenemotion.eval import (
    MetricReport, aggregate_report, collision_ratio, diversity,
    foot_skate_ratio, goal_errors, penetration, render_table,
)
from scenemotion.geometry import (
    FloorMap, distance_transform, query_field, voxelize_box_object,
)


def body_motion_with_feet(foot_xyz, n=10):
    """All-zero body frames except both feet following the given world track."""
    frames = np.zeros((n, BODY_WIDTH))
    frames[:, 1] = 0.9  # pelvis height
    frames[:, 3] = 1.0  # identity heading
    jp = np.zeros((n, 21, 3))
    jp[:] = 4.0  # park every joint far away at (4, 4, 4) + pelvis
    for i in range(n):
        for foot_joint in (10, 11):
            jp[i, foot_joint - 1] = np.asarray(foot_xyz(i)) - np.array([0.0, 0.9, 0.0])
    frames[:, JOINT_POS_SLICE] = jp.reshape(n, -1)
    return BodyMotion(frames, 20.0, default_skeleton())


class TestGoalErrors:
    def test_exact_hit(self):
        frames = np.zeros((5, 5))
        frames[:, 1] = 0.9
        frames[:, 3] = 1.0
        frames[-1] = [1.0, 0.9, 2.0, 0.6, 0.8]
        traj = RootTrajectory(frames)
        goal = RootPose(1.0, 0.9, 2.0, 0.6, 0.8)
        assert goal_errors(traj, goal) == (0.0, 0.0, 0.0)

    def test_opposite_heading(self):
        frames = np.zeros((3, 5))
        frames[:, 3] = 1.0
        traj = RootTrajectory(frames)
        pos, orient, height = goal_errors(traj, RootPose(0, 0, 0, -1.0, 0.0))
        assert orient == pytest.approx(np.pi)

    def test_three_four_five(self):
        frames = np.zeros((3, 5))
        frames[:, 3] = 1.0
        frames[-1, 0] = 0.3
        frames[-1, 2] = 0.4
        traj = RootTrajectory(frames)
        pos, _, _ = goal_errors(traj, RootPose(0.0, 0.0, 0.0, 1.0, 0.0))
        assert pos == pytest.approx(0.5)


class TestCollisionRatio:
    def make_field(self):
        walk = np.ones((40, 40), dtype=bool)
        walk[20:, :] = False
        return distance_transform(FloorMap((0.0, 0.0), 0.1, walk))

    def test_fully_walkable(self):
        field = self.make_field()
        frames = np.zeros((10, 5))
        frames[:, 0] = 0.5
        frames[:, 2] = np.linspace(0.5, 3.5, 10)
        frames[:, 3] = 1.0
        assert collision_ratio(RootTrajectory(frames), field) == 0.0

    def test_three_of_ten_outside(self):
        field = self.make_field()
        frames = np.zeros((10, 5))
        frames[:, 0] = 0.5
        frames[:, 2] = 2.0
        frames[:, 3] = 1.0
        frames[[2, 5, 7], 0] = 3.5  # deep inside the blocked half
        assert collision_ratio(RootTrajectory(frames), field) == pytest.approx(0.3)

    def test_matches_per_frame_oracle(self):
        field = self.make_field()
        rng = np.random.default_rng(0)
        frames = np.zeros((25, 5))
        frames[:, 0] = rng.uniform(0.0, 4.0, 25)
        frames[:, 2] = rng.uniform(0.0, 4.0, 25)
        frames[:, 3] = 1.0
        expected = np.mean([query_field(field, x, z)[0] > 0
                            for x, z in frames[:, [0, 2]]])
        assert collision_ratio(RootTrajectory(frames), field) == pytest.approx(expected)


class TestFootSkate:
    def test_static_standing(self):
        motion = body_motion_with_feet(lambda i: (0.1, 0.02, 0.0))
        assert foot_skate_ratio(motion) == 0.0

    def test_constructed_full_skate(self):
        motion = body_motion_with_feet(lambda i: (0.03 * i, 0.02, 0.0))
        assert foot_skate_ratio(motion) == 1.0

    def test_height_gate(self):
        motion = body_motion_with_feet(lambda i: (0.03 * i, 0.10, 0.0))
        assert foot_skate_ratio(motion) == 0.0

    def test_threshold_boundary(self):
        # 2.4 cm/frame slide at contact height stays under the threshold
        motion = body_motion_with_feet(lambda i: (0.024 * i, 0.02, 0.0))
        assert foot_skate_ratio(motion) == 0.0

    def test_lifted_walk_low_skate(self):
        traj = generate_locomotion(3, "walk")
        motion = lift_trajectory(traj)
        assert foot_skate_ratio(motion) < 0.05


class TestPenetration:
    def test_body_outside(self):
        vol = voxelize_box_object((0.1, 0.1, 0.1), (0.0, 0.1, 0.0), cell=0.025,
                                  padding=0.4)
        frames = np.zeros((4, BODY_WIDTH))
        frames[:, 0:3] = [3.0, 0.9, 3.0]
        frames[:, 3] = 1.0
        frames[:, JOINT_POS_SLICE] = 0.1
        motion = BodyMotion(frames, 20.0, default_skeleton())
        assert penetration(motion, vol) == (0.0, 0.0)

    def test_constructed_single_point(self):
        # exactly one pelvis proxy point 0.05 m inside the box, in 1 of 10 frames
        vol = voxelize_box_object((0.1, 0.1, 0.1), (0.0, 0.0, 0.0), cell=0.025,
                                  padding=0.4)
        n = 10
        frames = np.zeros((n, BODY_WIDTH))
        frames[:, 3] = 1.0
        frames[:, 0:3] = [5.0, 5.0, 5.0]
        frames[0, 0:3] = [0.0, 0.17, 0.0]
        jp = np.full((n, 21, 3), 5.0) - frames[:, None, 0:3]
        frames[:, JOINT_POS_SLICE] = jp.reshape(n, -1)
        motion = BodyMotion(frames, 20.0, default_skeleton())
        value, ratio = penetration(motion, vol)
        assert value == pytest.approx(0.05, abs=1e-6)
        assert ratio == 0.1

    def test_randomized_matches_brute_force(self):
        from scenemotion.geometry import query_volume
        vol = voxelize_box_object((0.2, 0.2, 0.2), (0.0, 0.3, 0.0), cell=0.05,
                                  padding=0.5)
        rng = np.random.default_rng(1)
        n = 5
        frames = np.zeros((n, BODY_WIDTH))
        frames[:, 0:3] = rng.uniform(-0.3, 0.3, size=(n, 3)) + [0, 0.4, 0]
        theta = rng.uniform(-np.pi, np.pi, n)
        frames[:, 3] = np.cos(theta)
        frames[:, 4] = np.sin(theta)
        frames[:, JOINT_POS_SLICE] = rng.normal(0, 0.2, size=(n, 63))
        sk = default_skeleton()
        motion = BodyMotion(frames, 20.0, sk)
        value, ratio = penetration(motion, vol)

        from scenemotion.core import joints_world
        dirs = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0],
                         [0, 0, 1], [0, 0, -1]], dtype=float)
        joints = joints_world(frames)
        depths = []
        deep_frames = 0
        for f in range(n):
            any_deep = False
            for j in range(22):
                for d in dirs:
                    p = joints[f, j] + sk.joint_radii[j] * d
                    v, _ = query_volume(vol, p)
                    if v < 0:
                        depths.append(-v)
                    if v < -0.03:
                        any_deep = True
            deep_frames += any_deep
        expected_value = float(np.mean(depths)) if depths else 0.0
        assert value == pytest.approx(expected_value, rel=1e-9)
        assert ratio == pytest.approx(deep_frames / n)


class TestDiversity:
    def two_motions(self):
        a = np.zeros((6, 5))
        a[:, 3] = 1.0
        b = a.copy()
        b[2, 0] = 1.0
        return RootTrajectory(a), RootTrajectory(b)

    def test_identical_is_zero(self):
        a, _ = self.two_motions()
        assert diversity([a, a]) == 0.0

    def test_unit_difference(self):
        a, b = self.two_motions()
        assert diversity([a, b]) == 1.0

    def test_matches_exhaustive_mean(self):
        rng = np.random.default_rng(2)
        motions = [RootTrajectory(rng.normal(size=(6, 5))) for _ in range(4)]
        expected = np.mean([
            np.linalg.norm(motions[i].frames.ravel() - motions[j].frames.ravel())
            for i in range(4) for j in range(i + 1, 4)])
        assert diversity(motions) == pytest.approx(expected, rel=1e-12)

    def test_needs_two(self):
        a, _ = self.two_motions()
        with pytest.raises(ValidationError):
            diversity([a])


class TestRigidInvariance:
    def test_metrics_invariant_to_rigid_motion(self):
        traj = generate_locomotion(5, "walk")
        motion = lift_trajectory(traj)
        _, scene = generate_scene(2, 0.6)
        field = scene.distance_field()
        goal = RootPose(*traj.frames[-1][:3], traj.frames[-1][3], traj.frames[-1][4])

        # translate everything by a grid-aligned offset: the field translates
        # exactly with its origin
        dx, dz = 1.3, -0.7
        t = RigidTransform2D(dx, dz, 1.0, 0.0)
        traj2 = traj.transformed(t)
        goal2 = t.apply_pose(goal)
        frames2 = np.array(motion.frames)
        frames2[:, ABS_SLICE] = t.apply_frames(frames2[:, ABS_SLICE])
        motion2 = BodyMotion(frames2, motion.frame_rate, motion.skeleton)
        from scenemotion.geometry import DistanceField2D
        field2 = DistanceField2D((field.origin[0] + dx, field.origin[1] + dz),
                                 field.cell, field.d)

        assert goal_errors(traj, goal) == pytest.approx(goal_errors(traj2, goal2))
        assert collision_ratio(traj, field) == collision_ratio(traj2, field2)
        assert foot_skate_ratio(motion) == pytest.approx(foot_skate_ratio(motion2))


class TestReport:
    def test_bounds_validated(self):
        with pytest.raises(ValidationError):
            MetricReport(collision_ratio=1.5)

    def test_aggregate_and_render(self):
        cases = [
            {"goal_pos_err": 0.2, "collision_ratio": 0.1},
            {"goal_pos_err": 0.4, "collision_ratio": 0.3},
        ]
        rep = aggregate_report(cases)
        assert rep.goal_pos_err == pytest.approx(0.3)
        assert rep.collision_ratio == pytest.approx(0.2)
        assert rep.count == 2
        text = render_table({"ours": rep})
        assert "ours" in text and "position (m)" in text
        assert "not computed" in text
