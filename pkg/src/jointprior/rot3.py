"""Rotation representations and conversions: continuous 6D, matrices, axis-angle.

The 6D representation stores the first two (unnormalized) columns of a
rotation matrix; a full matrix is recovered by Gram-Schmidt plus a cross
product. Axis-angle vectors point along the rotation axis with magnitude
equal to the rotation angle in [0, pi].

All math is in double precision. The batched helpers (trailing ``_batched``
suffix or leading-dim aware functions) are the workhorses; the dataclass API
wraps them for single rotations and enforces the type invariants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSixD

# 6D inputs whose columns have norm below this, or whose columns are parallel
# to within this, are rejected: the Gram-Schmidt direction is numerically
# meaningless and would poison gradients downstream.
EPS_DEGENERATE = 1e-8

# Log-map branch switchover distance from 0 and pi.
_ANGLE_SWITCH = 1e-6

_ORTHO_TOL = 1e-9


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class RotationSixD:
    """First two columns of an unnormalized rotation matrix, 6 scalars."""

    a0: np.ndarray
    a1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a0", _as_vec3(self.a0))
        object.__setattr__(self, "a1", _as_vec3(self.a1))

    @classmethod
    def from_flat(cls, v) -> "RotationSixD":
        a = np.asarray(v, dtype=np.float64).reshape(6)
        return cls(a[:3], a[3:])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.a0, self.a1])


@dataclass(frozen=True)
class RotMat:
    """A validated 3x3 rotation matrix."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {m.shape}")
        err = np.linalg.norm(m.T @ m - np.eye(3))
        det = np.linalg.det(m)
        if err >= _ORTHO_TOL or abs(det - 1.0) >= _ORTHO_TOL:
            raise ValueError(
                f"not a rotation matrix: ||m^T m - I|| = {err:.3e}, det = {det:.12f}"
            )
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class AxisAngle:
    """Axis-angle 3-vector: direction is the axis, magnitude the angle in [0, pi]."""

    v: np.ndarray

    def __post_init__(self):
        v = _as_vec3(self.v)
        if not np.all(np.isfinite(v)):
            raise ValueError("axis-angle components must be finite")
        n = np.linalg.norm(v)
        if n > np.pi + 1e-9:
            raise ValueError(f"axis-angle magnitude {n} exceeds pi")
        object.__setattr__(self, "v", v)


# ---------------------------------------------------------------------------
# Batched core (arrays in, arrays out; no wrapping)
# ---------------------------------------------------------------------------

def sixd_to_matrix(x) -> np.ndarray:
    """Gram-Schmidt a (..., 6) array of 6D rotations into (..., 3, 3) matrices.

    Column 0 is the normalized first half, column 1 the normalized rejection
    of the second half against column 0, column 2 their cross product.

    Raises DegenerateSixD if any entry fails the non-degeneracy check.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 6:
        raise ValueError(f"expected trailing dim 6, got shape {x.shape}")
    a0 = x[..., :3]
    a1 = x[..., 3:]
    n0 = np.linalg.norm(a0, axis=-1)
    n1 = np.linalg.norm(a1, axis=-1)
    if np.any(n0 < EPS_DEGENERATE) or np.any(n1 < EPS_DEGENERATE):
        raise DegenerateSixD("6D column norm below degeneracy threshold")
    c0 = a0 / n0[..., None]
    cosang = np.sum(c0 * a1, axis=-1) / n1
    if np.any(np.abs(cosang) > 1.0 - EPS_DEGENERATE):
        raise DegenerateSixD("6D columns are parallel to within the degeneracy threshold")
    u1 = a1 - np.sum(c0 * a1, axis=-1, keepdims=True) * c0
    c1 = u1 / np.linalg.norm(u1, axis=-1, keepdims=True)
    c2 = np.cross(c0, c1)
    return np.stack([c0, c1, c2], axis=-1)


def matrix_to_sixd(r) -> np.ndarray:
    """Drop the third column: (..., 3, 3) -> (..., 6) as (col0, col1)."""
    r = np.asarray(r, dtype=np.float64)
    return np.concatenate([r[..., :, 0], r[..., :, 1]], axis=-1)


def _skew(v: np.ndarray) -> np.ndarray:
    """(..., 3) -> (..., 3, 3) cross-product matrices."""
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=np.float64)
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def axis_angle_to_matrix(v) -> np.ndarray:
    """Rodrigues formula on (..., 3) axis-angle vectors -> (..., 3, 3).

    Uses the series forms of sin(t)/t and (1-cos(t))/t^2 below t = 1e-4, so
    the map is smooth through zero (a guard against 0/0 at the identity).
    """
    v = np.asarray(v, dtype=np.float64)
    theta = np.linalg.norm(v, axis=-1)
    t2 = theta * theta
    small = theta < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(theta) / theta)
        b = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                     (1.0 - np.cos(theta)) / t2)
    k = _skew(v)
    k2 = k @ k
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye + a[..., None, None] * k + b[..., None, None] * k2


def _vee_half(r: np.ndarray) -> np.ndarray:
    """(R - R^T)/2 collapsed to a 3-vector; equals sin(theta) * axis."""
    return 0.5 * np.stack(
        [
            r[..., 2, 1] - r[..., 1, 2],
            r[..., 0, 2] - r[..., 2, 0],
            r[..., 1, 0] - r[..., 0, 1],
        ],
        axis=-1,
    )


def matrix_angle(r) -> np.ndarray:
    """Rotation angle from the trace: arccos(clamp((tr - 1)/2)), in [0, pi]."""
    r = np.asarray(r, dtype=np.float64)
    tr = r[..., 0, 0] + r[..., 1, 1] + r[..., 2, 2]
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))


def _axis_near_pi(r: np.ndarray) -> np.ndarray:
    """Axis for a single matrix with angle within _ANGLE_SWITCH of pi.

    The axis is the (exact) unit eigenvector of R for eigenvalue 1, extracted
    as the right singular vector of R - I with the smallest singular value.
    The sign is fixed from the skew part when it is resolvable; at pi exactly
    both signs give the same rotation.
    """
    _, _, vt = np.linalg.svd(r - np.eye(3))
    axis = vt[-1]
    w = _vee_half(r)
    if float(w @ axis) < 0.0:
        axis = -axis
    return axis


def matrix_to_axis_angle(r) -> np.ndarray:
    """Log map: (..., 3, 3) rotation matrices -> (..., 3) axis-angle vectors.

    The angle comes from atan2(||skew part||, (tr - 1)/2), which stays
    accurate to machine precision at both ends of [0, pi] where the pure
    arccos-of-trace form loses half its digits. Mid-range axes use the skew
    part; near 0 the skew part itself is the Taylor-accurate answer; near pi
    the axis comes from the null space of R - I (the skew part vanishes).
    """
    r = np.asarray(r, dtype=np.float64)
    w = _vee_half(r)
    sin_est = np.linalg.norm(w, axis=-1)
    tr = r[..., 0, 0] + r[..., 1, 1] + r[..., 2, 2]
    theta = np.arctan2(sin_est, (tr - 1.0) / 2.0)

    flat_r = r.reshape(-1, 3, 3)
    flat_theta = theta.reshape(-1)
    flat_sin = sin_est.reshape(-1)
    flat_w = w.reshape(-1, 3)
    out = np.empty_like(flat_w)

    near0 = flat_theta <= _ANGLE_SWITCH
    nearpi = flat_theta >= np.pi - _ANGLE_SWITCH
    mid = ~(near0 | nearpi)

    # theta * unit axis, with the axis read off the skew part
    if np.any(mid):
        out[mid] = flat_w[mid] * (flat_theta[mid] / flat_sin[mid])[:, None]
    # w = theta*axis + O(theta^3): below the switchover the cubic term is < 1e-18
    out[near0] = flat_w[near0]
    for i in np.nonzero(nearpi)[0]:
        out[i] = flat_theta[i] * _axis_near_pi(flat_r[i])

    return out.reshape(r.shape[:-2] + (3,))


# ---------------------------------------------------------------------------
# Single-rotation API over the domain types
# ---------------------------------------------------------------------------

def sixd_to_rotmat(x: RotationSixD) -> RotMat:
    """Orthonormalize a 6D rotation into a matrix (Gram-Schmidt + cross)."""
    return RotMat(sixd_to_matrix(np.concatenate([x.a0, x.a1])))


def rotmat_to_sixd(r: RotMat) -> RotationSixD:
    """Inverse embedding: keep the first two columns."""
    return RotationSixD(r.m[:, 0].copy(), r.m[:, 1].copy())


def rotation_angle(r: RotMat) -> float:
    """Rotation angle in radians, from the trace formula."""
    return float(matrix_angle(r.m))


def rotmat_to_axis_angle(r: RotMat) -> AxisAngle:
    """Matrix log map to an axis-angle vector with magnitude in [0, pi]."""
    return AxisAngle(matrix_to_axis_angle(r.m))


def axis_angle_to_rotmat(v: AxisAngle) -> RotMat:
    """Rodrigues formula."""
    return RotMat(axis_angle_to_matrix(v.v))
