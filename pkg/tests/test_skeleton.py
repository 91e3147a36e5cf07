"""Tests for the 24-joint kinematic tree and forward kinematics."""

import numpy as np
import pytest

from jointprior import rot3, skeleton


@pytest.fixture(scope="module")
def tree():
    return skeleton.default_tree()


def rest_frame(trans=(0, 0, 0)):
    return skeleton.PoseFrame(np.zeros((24, 3)), np.asarray(trans, dtype=float))


def random_pose(rng, scale=0.6):
    v = rng.standard_normal((24, 3))
    v *= (scale * rng.uniform(0, 1, size=(24, 1))) / np.linalg.norm(v, axis=1, keepdims=True)
    return v


class TestDefaultTree:
    def test_root_convention(self, tree):
        assert tree.parent[0] == -1
        assert tree.num_joints == 24

    def test_depth_at_least_five(self, tree):
        def depth(j):
            d = 1
            while tree.parent[j] >= 0:
                j = tree.parent[j]
                d += 1
            return d

        assert max(depth(j) for j in range(24)) >= 5

    def test_rest_height_in_human_range(self, tree):
        pos = skeleton.forward_kinematics(tree, rest_frame(), skeleton.ShapeParams())
        height = pos[:, 2].max() - pos[:, 2].min()
        assert 1.5 <= height <= 1.9

    def test_deterministic(self):
        a, b = skeleton.default_tree(), skeleton.default_tree()
        assert np.array_equal(a.shape_basis, b.shape_basis)
        assert np.array_equal(a.rest_offset, b.rest_offset)


class TestForwardKinematics:
    def test_rest_pose_accumulates_offsets(self, tree):
        pos = skeleton.forward_kinematics(tree, rest_frame(), skeleton.ShapeParams())
        expected = np.zeros((24, 3))
        for j in range(1, 24):
            expected[j] = expected[tree.parent[j]] + tree.rest_offset[j]
        assert np.abs(pos - expected).max() < 1e-15

    def test_translation_equivariance(self, tree):
        base = skeleton.forward_kinematics(tree, rest_frame(), skeleton.ShapeParams())
        moved = skeleton.forward_kinematics(tree, rest_frame((1, 2, 3)), skeleton.ShapeParams())
        assert np.abs(moved - (base + np.array([1.0, 2.0, 3.0]))).max() < 1e-12

    def test_root_half_turn_flips_rest_offsets(self, tree):
        joints = np.zeros((24, 3))
        joints[0] = [0, 0, np.pi]
        pos = skeleton.forward_kinematics(
            tree, skeleton.PoseFrame(joints, np.zeros(3)), skeleton.ShapeParams())
        rest = skeleton.forward_kinematics(tree, rest_frame(), skeleton.ShapeParams())
        flipped = rest @ np.diag([-1.0, -1.0, 1.0])
        assert np.abs(pos - flipped).max() < 1e-12

    def test_rigid_motion_equivariance(self, tree):
        rng = np.random.default_rng(3)
        joints = random_pose(rng)
        beta = rng.uniform(-2, 2, 10)
        base = skeleton.forward_kinematics(
            tree, skeleton.PoseFrame(joints, np.zeros(3)), skeleton.ShapeParams(beta))

        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        rot_vec = axis * rng.uniform(0, np.pi)
        r = rot3.axis_angle_to_matrix(rot_vec)
        t = rng.standard_normal(3)

        # compose the rigid motion into the root joint and translation
        root_r = r @ rot3.axis_angle_to_matrix(joints[0])
        joints2 = joints.copy()
        joints2[0] = rot3.matrix_to_axis_angle(root_r)
        moved = skeleton.forward_kinematics(
            tree, skeleton.PoseFrame(joints2, t), skeleton.ShapeParams(beta))
        expected = base @ r.T + t
        assert np.abs(moved - expected).max() < 1e-10

    def test_shape_linearity(self, tree):
        rng = np.random.default_rng(4)
        joints = random_pose(rng)
        b1 = rng.uniform(-2, 2, 10)
        b2 = rng.uniform(-2, 2, 10)

        def fk(beta):
            return skeleton.forward_kinematics(
                tree, skeleton.PoseFrame(joints, np.zeros(3)), skeleton.ShapeParams(beta))

        lhs = fk(b1) + fk(b2) - fk(np.zeros(10))
        rhs = fk(b1 + b2)
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_bone_lengths_pose_invariant(self, tree):
        rng = np.random.default_rng(5)
        beta = rng.uniform(-2, 2, 10)

        def bone_lengths(joints):
            pos = skeleton.forward_kinematics(
                tree, skeleton.PoseFrame(joints, np.zeros(3)), skeleton.ShapeParams(beta))
            return np.array([np.linalg.norm(pos[j] - pos[tree.parent[j]])
                             for j in range(1, 24)])

        ref = bone_lengths(np.zeros((24, 3)))
        for _ in range(20):
            assert np.abs(bone_lengths(random_pose(rng)) - ref).max() < 1e-10


class TestSequenceKeypoints:
    def test_single_frame_matches_fk(self, tree):
        rng = np.random.default_rng(6)
        frame = skeleton.PoseFrame(random_pose(rng), rng.standard_normal(3))
        shape = skeleton.ShapeParams(rng.uniform(-2, 2, 10))
        seq = skeleton.MotionSequence((frame,), shape, 25.0)
        out = skeleton.sequence_keypoints(tree, seq)
        assert out.shape == (1, 24, 3)
        assert np.array_equal(out[0], skeleton.forward_kinematics(tree, frame, shape))

    def test_constant_pose_gives_identical_rows(self, tree):
        rng = np.random.default_rng(7)
        frame = skeleton.PoseFrame(random_pose(rng), np.zeros(3))
        seq = skeleton.MotionSequence((frame,) * 16, skeleton.ShapeParams(), 25.0)
        out = skeleton.sequence_keypoints(tree, seq)
        assert out.shape == (16, 24, 3)
        assert all(np.array_equal(out[t], out[0]) for t in range(16))

    def test_matches_frame_loop_bitwise(self, tree):
        rng = np.random.default_rng(8)
        frames = tuple(
            skeleton.PoseFrame(random_pose(rng), rng.standard_normal(3)) for _ in range(5))
        shape = skeleton.ShapeParams(rng.uniform(-2, 2, 10))
        seq = skeleton.MotionSequence(frames, shape, 25.0)
        out = skeleton.sequence_keypoints(tree, seq)
        for t, frame in enumerate(frames):
            assert np.array_equal(out[t], skeleton.forward_kinematics(tree, frame, shape))


class TestValidation:
    def test_sequence_needs_frames(self):
        with pytest.raises(ValueError):
            skeleton.MotionSequence((), skeleton.ShapeParams(), 25.0)

    def test_pose_frame_rejects_overlong_axis_angle(self):
        bad = np.zeros((24, 3))
        bad[3, 0] = np.pi + 1e-3
        with pytest.raises(ValueError):
            skeleton.PoseFrame(bad, np.zeros(3))

    def test_tree_rejects_cycles(self):
        parent = np.array(skeleton.PARENTS)
        parent[5] = 7  # forward reference breaks the topological order
        with pytest.raises(ValueError):
            skeleton.KinematicTree(parent, skeleton._REST_OFFSETS,
                                   np.zeros((24, 3, 10)))
