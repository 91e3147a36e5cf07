"""Metric oracles: every statistic must match a naive reference implementation."""

import numpy as np
import pytest

from jointprior import metrics
from jointprior.errors import DegenerateFrame, ShapeMismatch, TooShort


def naive_mpjpe(pred, gt):
    total, count = 0.0, 0
    for t in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            total += float(np.sqrt(np.sum((pred[t, j] - gt[t, j]) ** 2)))
            count += 1
    return total / count


def naive_acceleration(x):
    total, count = 0.0, 0
    for t in range(1, x.shape[0] - 1):
        for j in range(x.shape[1]):
            acc = x[t + 1, j] - 2 * x[t, j] + x[t - 1, j]
            total += float(np.linalg.norm(acc))
            count += 1
    return total / count


def naive_acc_err(pred, gt):
    total, count = 0.0, 0
    for t in range(1, pred.shape[0] - 1):
        for j in range(pred.shape[1]):
            ap = pred[t + 1, j] - 2 * pred[t, j] + pred[t - 1, j]
            ag = gt[t + 1, j] - 2 * gt[t, j] + gt[t - 1, j]
            total += float(np.linalg.norm(ap - ag))
            count += 1
    return total / count


def random_similarity(rng):
    from jointprior import rot3

    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    rot = rot3.axis_angle_to_matrix(axis * rng.uniform(0, np.pi))
    scale = rng.uniform(0.3, 3.0)
    trans = rng.standard_normal(3) * 100.0
    return scale, rot, trans


def apply_similarity(points, scale, rot, trans):
    return scale * points @ rot.T + trans


class TestMpjpe:
    def test_zero_for_equal_inputs(self):
        x = np.random.default_rng(0).standard_normal((4, 6, 3))
        assert metrics.mpjpe(x, x) == 0.0

    def test_three_four_five_offset(self):
        gt = np.zeros((3, 5, 3))
        pred = gt + np.array([3.0, 4.0, 0.0])
        assert abs(metrics.mpjpe(pred, gt) - 5.0) < 1e-12

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            pred = rng.standard_normal((5, 4, 3)) * 50
            gt = rng.standard_normal((5, 4, 3)) * 50
            assert abs(metrics.mpjpe(pred, gt) - naive_mpjpe(pred, gt)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            metrics.mpjpe(np.zeros((3, 4, 3)), np.zeros((3, 5, 3)))


class TestProcrustes:
    def test_recovers_similarity_transform(self):
        rng = np.random.default_rng(2)
        gt = rng.standard_normal((6, 8, 3)) * 100
        scale, rot, trans = random_similarity(rng)
        pred = apply_similarity(gt, scale, rot, trans)
        aligned = metrics.procrustes_align(pred, gt)
        assert np.abs(aligned - gt).max() < 1e-9

    def test_identity_on_equal_inputs(self):
        x = np.random.default_rng(3).standard_normal((2, 5, 3)) * 10
        assert np.abs(metrics.procrustes_align(x, x) - x).max() < 1e-9

    def test_beats_random_search_oracle(self):
        rng = np.random.default_rng(4)
        pred = rng.standard_normal((1, 6, 3)) * 10
        gt = rng.standard_normal((1, 6, 3)) * 10
        aligned = metrics.procrustes_align(pred, gt)
        best = np.sum((aligned[0] - gt[0]) ** 2)
        from jointprior import rot3

        # vectorized random similarity search
        n = 100_000
        axes = rng.standard_normal((n, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        rots = rot3.axis_angle_to_matrix(axes * rng.uniform(0, np.pi, (n, 1)))
        scales = rng.uniform(0.2, 4.0, n)
        mu_p, mu_g = pred[0].mean(0), gt[0].mean(0)
        centered = pred[0] - mu_p
        cand = scales[:, None, None] * np.einsum("nij,kj->nki", rots, centered) + mu_g
        residuals = np.sum((cand - gt[0]) ** 2, axis=(1, 2))
        assert best <= residuals.min() + 1e-9

    def test_degenerate_frame_raises(self):
        line = np.stack([np.linspace(0, 1, 5)] * 3, axis=1)[None]  # collinear
        target = np.random.default_rng(5).standard_normal((1, 5, 3))
        with pytest.raises(DegenerateFrame):
            metrics.procrustes_align(line, target)


class TestPaMpjpe:
    def test_zero_for_similarity_transformed_copy(self):
        rng = np.random.default_rng(6)
        gt = rng.standard_normal((4, 7, 3)) * 100
        scale, rot, trans = random_similarity(rng)
        pred = apply_similarity(gt, scale, rot, trans)
        assert metrics.pa_mpjpe(pred, gt) < 1e-9

    def test_never_exceeds_mpjpe(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            t, j = rng.integers(1, 8), rng.integers(3, 6)
            pred = rng.standard_normal((t, j, 3)) * 50
            gt = rng.standard_normal((t, j, 3)) * 50
            assert metrics.pa_mpjpe(pred, gt) <= metrics.mpjpe(pred, gt) + 1e-12

    def test_invariant_to_pre_similarity(self):
        rng = np.random.default_rng(8)
        pred = rng.standard_normal((3, 6, 3)) * 40
        gt = rng.standard_normal((3, 6, 3)) * 40
        base = metrics.pa_mpjpe(pred, gt)
        for _ in range(10):
            scale, rot, trans = random_similarity(rng)
            warped = apply_similarity(pred, scale, rot, trans)
            assert abs(metrics.pa_mpjpe(warped, gt) - base) < 1e-9


class TestAcceleration:
    def test_constant_velocity_is_zero(self):
        t = np.arange(10, dtype=float)
        x = np.stack([t, 2 * t, -t], axis=1)[:, None, :]
        assert metrics.acceleration(x) == 0.0

    def test_quadratic_gives_two(self):
        t = np.arange(8, dtype=float)
        x = np.zeros((8, 1, 3))
        x[:, 0, 0] = t * t
        assert abs(metrics.acceleration(x) - 2.0) < 1e-12

    def test_matches_naive(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            x = rng.standard_normal((6, 3, 3)) * 20
            assert abs(metrics.acceleration(x) - naive_acceleration(x)) < 1e-12

    def test_too_short(self):
        with pytest.raises(TooShort):
            metrics.acceleration(np.zeros((2, 4, 3)))


class TestAccelerationError:
    def test_zero_for_equal(self):
        x = np.random.default_rng(10).standard_normal((5, 4, 3))
        assert metrics.acceleration_error(x, x) == 0.0

    def test_constant_offset_vanishes(self):
        x = np.random.default_rng(11).standard_normal((5, 4, 3))
        assert metrics.acceleration_error(x + 7.5, x) < 1e-12

    def test_linear_drift_vanishes(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((6, 4, 3))
        drift = np.arange(6, dtype=float)[:, None, None] * np.array([1.0, -2.0, 0.5])
        assert metrics.acceleration_error(x + drift, x) < 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(13)
        pred = rng.standard_normal((7, 5, 3)) * 30
        gt = rng.standard_normal((7, 5, 3)) * 30
        assert metrics.acceleration_error(pred, gt) == metrics.acceleration_error(gt, pred)

    def test_matches_naive(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            pred = rng.standard_normal((5, 4, 3)) * 20
            gt = rng.standard_normal((5, 4, 3)) * 20
            assert abs(metrics.acceleration_error(pred, gt) - naive_acc_err(pred, gt)) < 1e-12


class TestReport:
    def test_report_fields(self):
        rng = np.random.default_rng(15)
        pred = rng.standard_normal((5, 6, 3)) * 10
        gt = rng.standard_normal((5, 6, 3)) * 10
        rep = metrics.report(pred, gt)
        assert rep.mpjpe == metrics.mpjpe(pred, gt)
        assert rep.pa_mpjpe == metrics.pa_mpjpe(pred, gt)
        assert rep.acc == metrics.acceleration(pred)
        assert rep.acc_err == metrics.acceleration_error(pred, gt)
        assert set(rep.to_dict()) == {"mpjpe", "pa_mpjpe", "acc", "acc_err"}
