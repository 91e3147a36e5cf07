"""Trajectory evaluation metrics: MPJPE, PA-MPJPE, ACC, ACC-ERR.

All inputs are (T, J, 3) joint positions in millimeters. Position errors come
back in millimeters, acceleration statistics in mm/frame^2. Procrustes
alignment is per frame (optimal similarity transform, Umeyama closed form).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, ShapeMismatch, TooShort


@dataclass(frozen=True)
class JointTrajectory:
    """Positions (T, J, 3) in millimeters at a given frame rate."""

    positions: np.ndarray
    frame_rate: float = 25.0

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        if p.ndim != 3 or p.shape[0] < 1 or p.shape[2] != 3:
            raise ValueError(f"positions must be (T, J, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", p)


@dataclass(frozen=True)
class MetricReport:
    """The four headline numbers for one evaluation."""

    mpjpe: float
    pa_mpjpe: float
    acc: float
    acc_err: float

    def to_dict(self) -> dict:
        return {
            "mpjpe": self.mpjpe,
            "pa_mpjpe": self.pa_mpjpe,
            "acc": self.acc,
            "acc_err": self.acc_err,
        }


def _positions(x) -> np.ndarray:
    if isinstance(x, JointTrajectory):
        return x.positions
    return np.asarray(x, dtype=np.float64)


def _pair(pred, gt):
    p, g = _positions(pred), _positions(gt)
    if p.shape != g.shape:
        raise ShapeMismatch(f"trajectory shapes differ: {p.shape} vs {g.shape}")
    return p, g


def mpjpe(pred, gt) -> float:
    """Mean Euclidean distance over all frames and joints, mm."""
    p, g = _pair(pred, gt)
    return float(np.mean(np.linalg.norm(p - g, axis=-1)))


def _align_frame(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Optimal similarity transform of one (J, 3) frame onto another."""
    mu_p = pred.mean(axis=0)
    mu_g = gt.mean(axis=0)
    xp = pred - mu_p
    xg = gt - mu_g

    n = pred.shape[0]
    cov = xg.T @ xp / n
    u, s, vt = np.linalg.svd(cov)
    # collinear (or coincident) points leave the in-plane rotation unconstrained
    if s[1] <= max(s[0], 1.0) * 1e-12:
        raise DegenerateFrame("frame points are rank-deficient; alignment ill-posed")
    d = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        d[2, 2] = -1.0
    rot = u @ d @ vt
    var_p = np.mean(np.sum(xp * xp, axis=1))
    scale = np.trace(np.diag(s) @ d) / var_p
    return scale * (pred - mu_p) @ rot.T + mu_g


def procrustes_align(pred, gt) -> np.ndarray:
    """Per-frame similarity alignment of pred onto gt; returns aligned pred."""
    p, g = _pair(pred, gt)
    if p.shape[1] < 3:
        raise DegenerateFrame("need at least 3 points per frame")
    return np.stack([_align_frame(p[t], g[t]) for t in range(p.shape[0])])


def pa_mpjpe(pred, gt) -> float:
    """MPJPE after per-frame Procrustes alignment, mm."""
    p, g = _pair(pred, gt)
    return mpjpe(procrustes_align(p, g), g)


def _second_difference(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 3:
        raise TooShort(f"need T >= 3 frames for acceleration, got {x.shape[0]}")
    return x[2:] - 2.0 * x[1:-1] + x[:-2]


def acceleration(traj) -> float:
    """Mean norm of the second temporal difference, mm/frame^2."""
    x = _positions(traj)
    return float(np.mean(np.linalg.norm(_second_difference(x), axis=-1)))


def acceleration_error(pred, gt) -> float:
    """Mean norm of the difference between pred and gt second differences."""
    p, g = _pair(pred, gt)
    diff = _second_difference(p) - _second_difference(g)
    return float(np.mean(np.linalg.norm(diff, axis=-1)))


def report(pred, gt) -> MetricReport:
    """All four metrics for one pred/gt trajectory pair."""
    return MetricReport(
        mpjpe=mpjpe(pred, gt),
        pa_mpjpe=pa_mpjpe(pred, gt),
        acc=acceleration(pred),
        acc_err=acceleration_error(pred, gt),
    )
