"""Skeleton-only body model: a fixed 24-joint kinematic tree with linear shape
blendshapes, standing in for a full parametric mesh body.

Joint ordering (frozen; file formats and feature layouts depend on it):

    0 pelvis        6 spine2       12 neck           18 left_elbow
    1 left_hip      7 left_ankle   13 left_collar    19 right_elbow
    2 right_hip     8 right_ankle  14 right_collar   20 left_wrist
    3 spine1        9 spine3       15 head           21 right_wrist
    4 left_knee    10 left_foot    16 left_shoulder  22 left_hand
    5 right_knee   11 right_foot   17 right_shoulder 23 right_hand

The rest pose is an upright T-pose, z up, y forward, x to the body's left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rot3

NUM_JOINTS = 24
NUM_SHAPE = 10

JOINT_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
    "left_hand", "right_hand",
)

PARENTS = (
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19,
    20, 21,
)

# Bone offsets from parent in the rest pose, meters.
_REST_OFFSETS = np.array(
    [
        [0.00, 0.00, 0.00],    # pelvis (root)
        [0.09, 0.00, -0.09],   # left_hip
        [-0.09, 0.00, -0.09],  # right_hip
        [0.00, 0.00, 0.11],    # spine1
        [0.00, 0.00, -0.42],   # left_knee
        [0.00, 0.00, -0.42],   # right_knee
        [0.00, 0.00, 0.13],    # spine2
        [0.00, 0.00, -0.43],   # left_ankle
        [0.00, 0.00, -0.43],   # right_ankle
        [0.00, 0.00, 0.05],    # spine3
        [0.00, 0.13, -0.05],   # left_foot
        [0.00, 0.13, -0.05],   # right_foot
        [0.00, 0.00, 0.21],    # neck
        [0.07, 0.00, 0.10],    # left_collar
        [-0.07, 0.00, 0.10],   # right_collar
        [0.00, 0.00, 0.09],    # head
        [0.09, 0.00, 0.02],    # left_shoulder
        [-0.09, 0.00, 0.02],   # right_shoulder
        [0.26, 0.00, 0.00],    # left_elbow
        [-0.26, 0.00, 0.00],   # right_elbow
        [0.25, 0.00, 0.00],    # left_wrist
        [-0.25, 0.00, 0.00],   # right_wrist
        [0.08, 0.00, 0.00],    # left_hand
        [-0.08, 0.00, 0.00],   # right_hand
    ],
    dtype=np.float64,
)

_LEG_JOINTS = (1, 2, 4, 5, 7, 8, 10, 11)

# Seed for the frozen random tail of the shape basis (components 2..9).
_SHAPE_BASIS_SEED = 20240917


@dataclass(frozen=True)
class KinematicTree:
    """Fixed joint hierarchy: parents, rest offsets, and shape blendshapes."""

    parent: np.ndarray       # (24,) int, parent[0] == -1
    rest_offset: np.ndarray  # (24, 3) meters
    shape_basis: np.ndarray  # (24, 3, 10) meters per unit beta

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        rest = np.asarray(self.rest_offset, dtype=np.float64)
        basis = np.asarray(self.shape_basis, dtype=np.float64)
        n = parent.shape[0]
        if rest.shape != (n, 3) or basis.shape != (n, 3, NUM_SHAPE):
            raise ValueError("inconsistent tree array shapes")
        if parent[0] != -1 or np.any(parent[1:] < 0) or np.any(parent[1:] >= np.arange(1, n)):
            raise ValueError("parents must be -1 at the root and strictly topological")
        if np.any(np.linalg.norm(rest[1:], axis=1) == 0.0):
            raise ValueError("non-root rest offsets must be nonzero")
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "rest_offset", rest)
        object.__setattr__(self, "shape_basis", basis)

    @property
    def num_joints(self) -> int:
        return self.parent.shape[0]


@dataclass(frozen=True)
class ShapeParams:
    """10 linear shape coefficients."""

    beta: np.ndarray = field(default_factory=lambda: np.zeros(NUM_SHAPE))

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=np.float64)
        if b.shape != (NUM_SHAPE,):
            raise ValueError(f"beta must have shape ({NUM_SHAPE},), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("beta must be finite")
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class PoseFrame:
    """One frame: 24 axis-angle joint rotations plus root translation (meters)."""

    joints: np.ndarray  # (24, 3) axis-angle rows
    trans: np.ndarray   # (3,)

    def __post_init__(self):
        j = np.asarray(self.joints, dtype=np.float64)
        t = np.asarray(self.trans, dtype=np.float64)
        if j.shape != (NUM_JOINTS, 3):
            raise ValueError(f"joints must have shape ({NUM_JOINTS}, 3), got {j.shape}")
        if t.shape != (3,):
            raise ValueError(f"trans must have shape (3,), got {t.shape}")
        norms = np.linalg.norm(j, axis=1)
        if np.any(norms > np.pi + 1e-9) or not np.all(np.isfinite(j)):
            raise ValueError("joint rows must be axis-angle vectors with magnitude <= pi")
        object.__setattr__(self, "joints", j)
        object.__setattr__(self, "trans", t)


@dataclass(frozen=True)
class MotionSequence:
    """T pose frames with one shape vector and a frame rate."""

    frames: tuple
    shape: ShapeParams
    frame_rate: float

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 1:
            raise ValueError("a motion sequence needs at least one frame")
        if not self.frame_rate > 0:
            raise ValueError("frame rate must be positive")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def pose_array(self) -> np.ndarray:
        """Stacked (T, 24, 3) axis-angle poses."""
        return np.stack([f.joints for f in self.frames])

    def trans_array(self) -> np.ndarray:
        """Stacked (T, 3) root translations."""
        return np.stack([f.trans for f in self.frames])

    @classmethod
    def from_arrays(cls, pose, trans, beta, frame_rate) -> "MotionSequence":
        pose = np.asarray(pose, dtype=np.float64)
        trans = np.asarray(trans, dtype=np.float64)
        frames = tuple(PoseFrame(pose[t], trans[t]) for t in range(pose.shape[0]))
        return cls(frames, ShapeParams(np.asarray(beta, dtype=np.float64)), float(frame_rate))


def _default_shape_basis() -> np.ndarray:
    basis = np.zeros((NUM_JOINTS, 3, NUM_SHAPE), dtype=np.float64)
    # component 0: uniform +5% of every bone per unit beta
    basis[:, :, 0] = 0.05 * _REST_OFFSETS
    # component 1: +8% on the leg chain per unit beta
    for j in _LEG_JOINTS:
        basis[j, :, 1] = 0.08 * _REST_OFFSETS[j]
    # components 2..9: small frozen random directions
    rng = np.random.default_rng(_SHAPE_BASIS_SEED)
    basis[:, :, 2:] = 0.01 * rng.standard_normal((NUM_JOINTS, 3, NUM_SHAPE - 2))
    basis[0] = 0.0  # the root has no bone to scale
    return basis


def default_tree() -> KinematicTree:
    """The canonical 24-joint tree. Deterministic; safe to call repeatedly."""
    return KinematicTree(
        parent=np.array(PARENTS, dtype=np.int64),
        rest_offset=_REST_OFFSETS.copy(),
        shape_basis=_default_shape_basis(),
    )


def fk_rotmats(tree: KinematicTree, rotmats, trans, beta) -> np.ndarray:
    """Forward kinematics from per-joint rotation matrices.

    rotmats: (T, 24, 3, 3); trans: (T, 3) or (3,); beta: (10,).
    Returns (T, 24, 3) joint positions in meters. position[:, 0] == trans, and
    each child sits at parent + (accumulated parent rotation) @ shaped offset.
    """
    rotmats = np.asarray(rotmats, dtype=np.float64)
    if rotmats.ndim == 3:
        rotmats = rotmats[None]
    t_count = rotmats.shape[0]
    trans = np.broadcast_to(np.asarray(trans, dtype=np.float64), (t_count, 3))
    beta = np.asarray(beta, dtype=np.float64)
    offsets = tree.rest_offset + tree.shape_basis @ beta  # (24, 3)

    n = tree.num_joints
    glob = np.empty((t_count, n, 3, 3), dtype=np.float64)
    pos = np.empty((t_count, n, 3), dtype=np.float64)
    glob[:, 0] = rotmats[:, 0]
    pos[:, 0] = trans
    for j in range(1, n):
        p = tree.parent[j]
        glob[:, j] = glob[:, p] @ rotmats[:, j]
        pos[:, j] = pos[:, p] + (glob[:, p] @ offsets[j])
    return pos


def forward_kinematics(tree: KinematicTree, frame: PoseFrame, shape: ShapeParams) -> np.ndarray:
    """Joint positions (24, 3) in meters for one pose frame."""
    rotmats = rot3.axis_angle_to_matrix(frame.joints)
    return fk_rotmats(tree, rotmats[None], frame.trans[None], shape.beta)[0]


def sequence_keypoints(tree: KinematicTree, seq: MotionSequence) -> np.ndarray:
    """Frame-wise forward kinematics over a sequence: (T, 24, 3) meters."""
    rotmats = rot3.axis_angle_to_matrix(seq.pose_array())
    return fk_rotmats(tree, rotmats, seq.trans_array(), seq.shape.beta)
