"""The video pose generator and the motion discriminator.

The generator keeps every joint's pathway separate: a per-joint observation
encoder feeds 24 independent 2-layer GRUs (hidden 64), a per-joint linear
lift back to 128-d, and 24 independent regressor heads emitting 6D rotations.
A shared camera/shape branch concatenates the per-joint camera features and
predicts the weak camera per frame plus one shape vector per window. The
discriminator scores a pose sequence with a small MLP over frames pooled by
softmax attention.

Everything here records onto the gradcore tape, so the losses differentiate
through Gram-Schmidt orthonormalization, forward kinematics, and projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rot3, skeleton
from .errors import BehindCamera, DegenerateSixD, NonPositiveScale, ShapeMismatch
from .gradcore import GruCell, JointLinear, Linear, all_blocks, tape
from .gradcore.nn import gru_layer
from .gradcore.tape import Tensor

SIX_D = 6
IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


@dataclass(frozen=True)
class GeneratorConfig:
    joints: int = 24
    obs_dim: int = 3
    feat_dim: int = 128
    cam_feat_dim: int = 32
    hidden_dim: int = 64
    res: int = 224
    focal: float = 5000.0
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "joints": self.joints, "obs_dim": self.obs_dim,
            "feat_dim": self.feat_dim, "cam_feat_dim": self.cam_feat_dim,
            "hidden_dim": self.hidden_dim, "res": self.res,
            "focal": self.focal, "seed": self.seed,
        }


@dataclass
class FeatureVolume:
    """Per-frame, per-joint features: temporal-branch f and camera-shape c."""

    joint_features: Tensor      # (..., T, J, feat_dim)
    cam_shape_features: Tensor  # (..., T, J, cam_feat_dim)


@dataclass
class GeneratorOutput:
    """Everything one forward pass produces, still attached to the tape."""

    pose6d: Tensor          # (..., T, J, 6) raw head output
    rotmats: Tensor         # (..., T, J, 3, 3) orthonormalized
    weak_cam: Tensor        # (..., T, 3) as (s, t_x, t_y)
    trans: Tensor           # (..., T, 3) with t_z recovered from s
    beta: Tensor            # (..., 10) one shape per window
    features: Tensor        # (..., T, J, feat_dim) frame-wise f
    tilde_features: Tensor  # (..., T, J, feat_dim) temporally fused f-tilde

    @cached_property
    def pose_axis_angle(self) -> np.ndarray:
        """Axis-angle view of the rotmats; detached convenience output."""
        return rot3.matrix_to_axis_angle(self.rotmats.value)


def _leaf(slot, trainable: bool) -> Tensor:
    return tape.param(slot) if trainable else tape.const(slot.values)


def sixd_to_rotmat_tensor(x6: Tensor) -> Tensor:
    """Differentiable Gram-Schmidt: (..., 6) -> (..., 3, 3) with columns
    (normalized a0, normalized rejection of a1, their cross product)."""
    vals = x6.value
    n0 = np.linalg.norm(vals[..., :3], axis=-1)
    n1 = np.linalg.norm(vals[..., 3:], axis=-1)
    if np.any(n0 < rot3.EPS_DEGENERATE) or np.any(n1 < rot3.EPS_DEGENERATE):
        raise DegenerateSixD("6D head output has a near-zero column")
    cosang = np.abs(np.sum(vals[..., :3] * vals[..., 3:], axis=-1)) / (n0 * n1)
    if np.any(cosang > 1.0 - rot3.EPS_DEGENERATE):
        raise DegenerateSixD("6D head output has near-parallel columns")

    a0 = x6[..., :3]
    a1 = x6[..., 3:]
    c0 = a0 / tape.vnorm(a0, keepdims=True)
    dot = (c0 * a1).sum(axis=-1, keepdims=True)
    u1 = a1 - dot * c0
    c1 = u1 / tape.vnorm(u1, keepdims=True)
    c2 = tape.cross(c0, c1)
    return tape.stack([c0, c1, c2], axis=-1)


def fk_rotmats_tensor(tree: skeleton.KinematicTree, rotmats: Tensor,
                      beta: Tensor) -> Tensor:
    """Differentiable forward kinematics, root pinned at the origin.

    rotmats (B, T, J, 3, 3), beta (B, 10) -> positions (B, T, J, 3) meters.
    """
    b, t = rotmats.value.shape[:2]
    n = tree.num_joints
    glob = [rotmats[:, :, 0]]
    pos = [tape.const(np.zeros((b, t, 3)))]
    for j in range(1, n):
        p = tree.parent[j]
        offset = tape.matvec(tape.const(tree.shape_basis[j]), beta) \
            + tape.const(tree.rest_offset[j])              # (B, 3)
        off_col = offset.reshape((b, 1, 3, 1))
        moved = tape.matmul(glob[p], off_col).reshape((b, t, 3))
        pos.append(pos[p] + moved)
        glob.append(tape.matmul(glob[p], rotmats[:, :, j]))
    return tape.stack(pos, axis=2)


def project_tensor(points: Tensor, trans: Tensor, focal: float, res: int) -> Tensor:
    """Differentiable pinhole: points (B, T, J, 3) + trans (B, T, 3) -> (B, T, J, 2)."""
    b, t = points.value.shape[:2]
    shifted = points + trans.reshape((b, t, 1, 3))
    z = shifted[..., 2:]
    if np.any(z.value <= 1e-6):
        raise BehindCamera(f"translated depth {z.value.min():.3e} <= 1e-6")
    return (focal * shifted[..., :2]) / z + res / 2.0


class Generator:
    """24 decomposed temporal encoders plus the camera/shape branch."""

    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        j = cfg.joints
        self.enc_f = JointLinear("enc_f", j, cfg.obs_dim, cfg.feat_dim, rng)
        self.enc_c = JointLinear("enc_c", j, cfg.obs_dim, cfg.cam_feat_dim, rng)
        self.gru0 = GruCell("gru0", cfg.feat_dim, cfg.hidden_dim, rng, joints=j)
        self.gru1 = GruCell("gru1", cfg.hidden_dim, cfg.hidden_dim, rng, joints=j)
        self.lift = JointLinear("lift", j, cfg.hidden_dim, cfg.feat_dim, rng)
        self.head = JointLinear("head", j, cfg.feat_dim, SIX_D, rng)
        self.w_beta = Linear("w_beta", j * cfg.cam_feat_dim, skeleton.NUM_SHAPE, rng)
        self.w_cam = Linear("w_cam", j * cfg.cam_feat_dim, 3, rng)
        # identity-rotation prior keeps the 6D head away from the degenerate set
        self.head.b.values[:] = IDENTITY_6D
        # start the weak camera at unit scale so depth recovery is defined
        self.w_cam.b.values[:] = np.array([1.0, 0.0, 0.0])

    def slots(self) -> list:
        out = []
        for layer in (self.enc_f, self.enc_c, self.gru0, self.gru1,
                      self.lift, self.head, self.w_beta, self.w_cam):
            out.extend(layer.slots())
        return out

    def trainable_slots(self, frame_wise: bool = False) -> list:
        """Parameters the optimizer should own; the frame-wise baseline has
        no temporal pathway, so its GRUs and lift stay untouched at init."""
        if not frame_wise:
            return self.slots()
        out = []
        for layer in (self.enc_f, self.enc_c, self.head, self.w_beta, self.w_cam):
            out.extend(layer.slots())
        return out

    def blocks(self) -> list:
        return all_blocks(self.slots())

    def encode_observations(self, obs) -> FeatureVolume:
        """Per-joint tanh(linear) features from (..., T, J, obs_dim) observations.

        Pixel coordinates are normalized to [-1, 1] around the image center;
        the confidence channel passes through unchanged. Joint i's features
        depend only on joint i's observations.
        """
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape[-1] != self.cfg.obs_dim or obs.shape[-2] != self.cfg.joints:
            raise ShapeMismatch(f"observations shaped {obs.shape}, expected "
                                f"(..., T, {self.cfg.joints}, {self.cfg.obs_dim})")
        half = self.cfg.res / 2.0
        normed = obs.copy()
        normed[..., :2] = (obs[..., :2] - half) / half
        x = tape.const(normed)
        return FeatureVolume(
            joint_features=tape.tanh(self.enc_f(x)),
            cam_shape_features=tape.tanh(self.enc_c(x)),
        )

    def forward(self, fv: FeatureVolume, frame_wise: bool = False) -> GeneratorOutput:
        """Run the temporal branch and the camera/shape branch.

        With ``frame_wise`` the GRUs are bypassed and the regressor heads read
        the frame-wise features directly (the per-frame baseline).
        """
        f = fv.joint_features
        c = fv.cam_shape_features
        squeeze = f.value.ndim == 3
        if squeeze:
            f = f.reshape((1,) + f.value.shape)
            c = c.reshape((1,) + c.value.shape)
        b, t, j, _ = f.value.shape

        if frame_wise:
            tilde = f
        else:
            tilde = self.lift(gru_layer(self.gru1, gru_layer(self.gru0, f)))

        pose6d = self.head(tilde)
        rotmats = sixd_to_rotmat_tensor(pose6d)

        c_flat = c.reshape((b, t, j * self.cfg.cam_feat_dim))
        cam = self.w_cam(c_flat)                       # (B, T, 3) = (s, tx, ty)
        beta = self.w_beta(c_flat).mean(axis=1)        # (B, 10)

        s = cam[..., 0:1]
        if np.any(s.value <= 0.0):
            raise NonPositiveScale(
                f"predicted weak-camera scale {s.value.min():.4f} <= 0")
        t_z = (2.0 * self.cfg.focal / self.cfg.res) / s
        trans = tape.concat([cam[..., 1:3], t_z], axis=-1)

        if squeeze:
            return GeneratorOutput(
                pose6d=pose6d[0], rotmats=rotmats[0], weak_cam=cam[0],
                trans=trans[0], beta=beta[0], features=f[0], tilde_features=tilde[0])
        return GeneratorOutput(
            pose6d=pose6d, rotmats=rotmats, weak_cam=cam, trans=trans,
            beta=beta, features=f, tilde_features=tilde)

    def manifest(self) -> dict:
        return {"generator": self.cfg.to_dict()}


@dataclass(frozen=True)
class DiscriminatorConfig:
    joints: int = 24
    pose_dim: int = SIX_D
    hidden: int = 256
    seed: int = 1

    def to_dict(self) -> dict:
        return {"joints": self.joints, "pose_dim": self.pose_dim,
                "hidden": self.hidden, "seed": self.seed}


class MotionDiscriminator:
    """Frame MLP + softmax attention pooling + scalar output head."""

    def __init__(self, cfg: DiscriminatorConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        in_dim = cfg.joints * cfg.pose_dim
        self.fc1 = Linear("disc.fc1", in_dim, cfg.hidden, rng)
        self.fc2 = Linear("disc.fc2", cfg.hidden, cfg.hidden, rng)
        self.attn = Linear("disc.attn", cfg.hidden, 1, rng)
        self.out = Linear("disc.out", cfg.hidden, 1, rng)

    def slots(self) -> list:
        out = []
        for layer in (self.fc1, self.fc2, self.attn, self.out):
            out.extend(layer.slots())
        return out

    def blocks(self) -> list:
        return all_blocks(self.slots())

    def forward(self, pose6d, trainable: bool = True,
                uniform_attention: bool = False) -> Tensor:
        """Score pose sequences: (B, T, J, 6) or (T, J, 6) -> (B,) or scalar.

        ``trainable=False`` treats the discriminator weights as constants so
        adversarial gradients reach only the pose input. The uniform-attention
        switch replaces the softmax weights with 1/T (a test hook).
        """
        x = tape.as_tensor(pose6d)
        squeeze = x.value.ndim == 3
        if squeeze:
            x = x.reshape((1,) + x.value.shape)
        b, t, j, d = x.value.shape
        if j != self.cfg.joints or d != self.cfg.pose_dim:
            raise ShapeMismatch(f"pose sequence shaped {x.value.shape}")

        def lin(layer, h):
            w = _leaf(layer.w, trainable)
            wt = tape.Tensor(w.value.T, (w,), lambda g: (g.T,))
            flat = h.reshape((-1, h.value.shape[-1]))
            y = tape.matmul(flat, wt) + _leaf(layer.b, trainable)
            return y.reshape(h.value.shape[:-1] + (layer.w.values.shape[0],))

        feat = tape.tanh(lin(self.fc2, tape.tanh(lin(self.fc1,
                          x.reshape((b, t, j * d))))))
        if uniform_attention:
            weights = tape.const(np.full((b, t, 1), 1.0 / t))
        else:
            weights = tape.softmax(lin(self.attn, feat), axis=1)
        pooled = (weights * feat).sum(axis=1)           # (B, hidden)
        score = lin(self.out, pooled).reshape((b,))
        return score[0] if squeeze else score

    def attention_weights(self, pose6d) -> np.ndarray:
        """Detached softmax attention over frames, for inspection."""
        x = tape.as_tensor(pose6d)
        squeeze = x.value.ndim == 3
        if squeeze:
            x = x.reshape((1,) + x.value.shape)
        b, t, j, d = x.value.shape

        def lin(layer, h):
            return h @ layer.w.values.T + layer.b.values

        feat = np.tanh(lin(self.fc2, np.tanh(lin(self.fc1,
                       x.value.reshape(b, t, j * d)))))
        scores = lin(self.attn, feat)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        w = (e / e.sum(axis=1, keepdims=True))[..., 0]
        return w[0] if squeeze else w

    def manifest(self) -> dict:
        return {"discriminator": self.cfg.to_dict()}


def encode_observations(g: Generator, obs) -> FeatureVolume:
    """Functional alias for ``g.encode_observations``."""
    return g.encode_observations(obs)


def generator_forward(g: Generator, fv: FeatureVolume,
                      frame_wise: bool = False) -> GeneratorOutput:
    """Functional alias for ``g.forward``."""
    return g.forward(fv, frame_wise=frame_wise)


def discriminator_forward(d: MotionDiscriminator, pose_seq) -> Tensor:
    """Score one pose sequence (T, J, 6); returns a scalar tensor."""
    return d.forward(pose_seq)


def rotmats_to_sixd_tensor(rotmats: Tensor) -> Tensor:
    """Differentiable first-two-columns view: (..., 3, 3) -> (..., 6)."""
    return tape.concat([rotmats[..., :, 0], rotmats[..., :, 1]], axis=-1)
