"""Weak-perspective camera: depth recovery from scale, and pinhole projection.

A weak camera (s, t_x, t_y) is turned into a full camera-space translation by
t_z = 2 f / (res * s); projection then runs through a presumptive pinhole
with identity extrinsic rotation and the principal point at the image center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, NonPositiveScale

MIN_DEPTH = 1e-6


@dataclass(frozen=True)
class WeakCamera:
    """Scale plus in-plane translation (meters in camera space)."""

    s: float
    t_x: float = 0.0
    t_y: float = 0.0

    def __post_init__(self):
        if not self.s > 0:
            raise NonPositiveScale(f"weak-camera scale must be > 0, got {self.s}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Square pinhole: focal length in pixels, resolution in pixels."""

    f: float = 5000.0
    res: int = 224

    def __post_init__(self):
        if not (self.f > 0 and self.res > 0):
            raise ValueError("focal length and resolution must be positive")


def recover_translation(cam: WeakCamera, intr: CameraIntrinsics) -> np.ndarray:
    """Camera-space translation [t_x, t_y, 2f/(res*s)] in meters."""
    if not cam.s > 0:
        raise NonPositiveScale(f"weak-camera scale must be > 0, got {cam.s}")
    t_z = 2.0 * intr.f / (intr.res * cam.s)
    return np.array([cam.t_x, cam.t_y, t_z], dtype=np.float64)


def project(points, intr: CameraIntrinsics, trans) -> np.ndarray:
    """Pinhole projection of translated points onto the image plane.

    points: (..., N, 3) meters; trans: (3,) or broadcastable (..., 3).
    Returns (..., N, 2) pixel coordinates. Raises BehindCamera if any
    translated depth is at or below MIN_DEPTH.
    """
    points = np.asarray(points, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    shifted = points + trans[..., None, :]
    z = shifted[..., 2]
    if np.any(z <= MIN_DEPTH):
        raise BehindCamera(f"translated depth {z.min():.3e} <= {MIN_DEPTH:.0e}")
    uv = intr.f * shifted[..., :2] / z[..., None] + intr.res / 2.0
    return uv
