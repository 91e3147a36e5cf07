"""The five-term generator objective and the least-squares discriminator loss.

Generator terms, each an MSE unless noted:
  3D keypoints (root-centered, meters), projected 2D keypoints (pixels, as
  the projection emits them), pose rotation matrices, shape coefficients, the
  adversarial score pushed toward 1, and a feature-consistency penalty: the
  mean per-joint Frobenius distance between temporally fused and frame-wise
  features, scaled by 1/(J*T).

The discriminator sees detached pose sequences and optimizes the standard
least-squares assignment: real scores toward 1, fake scores toward 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import models, rot3, skeleton
from ..errors import ShapeMismatch
from ..gradcore import mse, tape


@dataclass(frozen=True)
class LossWeights:
    lambda_3d: float = 300.0
    lambda_2d: float = 300.0
    lambda_smpl_pose: float = 60.0
    lambda_smpl_beta: float = 0.06
    lambda_reg: float = 60.0
    lambda_adv: float = 2.0

    def __post_init__(self):
        for name, value in self.to_dict().items():
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    def to_dict(self) -> dict:
        return {
            "lambda_3d": self.lambda_3d, "lambda_2d": self.lambda_2d,
            "lambda_smpl_pose": self.lambda_smpl_pose,
            "lambda_smpl_beta": self.lambda_smpl_beta,
            "lambda_reg": self.lambda_reg, "lambda_adv": self.lambda_adv,
        }


def _as_batch(out: models.GeneratorOutput, clips):
    if isinstance(clips, (list, tuple)):
        clips = list(clips)
    else:
        clips = [clips]
    if out.rotmats.value.ndim == 4:  # single-clip output, lift to batch of one
        out = models.GeneratorOutput(
            pose6d=out.pose6d.reshape((1,) + out.pose6d.value.shape),
            rotmats=out.rotmats.reshape((1,) + out.rotmats.value.shape),
            weak_cam=out.weak_cam.reshape((1,) + out.weak_cam.value.shape),
            trans=out.trans.reshape((1,) + out.trans.value.shape),
            beta=out.beta.reshape((1,) + out.beta.value.shape),
            features=out.features.reshape((1,) + out.features.value.shape),
            tilde_features=out.tilde_features.reshape(
                (1,) + out.tilde_features.value.shape),
        )
    if out.rotmats.value.shape[0] != len(clips):
        raise ShapeMismatch(
            f"{out.rotmats.value.shape[0]} outputs vs {len(clips)} clips")
    return out, clips


def feature_regularizer(out: models.GeneratorOutput) -> tape.Tensor:
    """Mean over clips of sum_j ||f_tilde_j - f_j||_F / (J * T)."""
    diff = out.tilde_features - out.features          # (B, T, J, F)
    b, t, j, feat = diff.value.shape
    per_joint = tape.transpose(diff, (0, 2, 1, 3)).reshape((b, j, t * feat))
    norms = tape.vnorm(per_joint, axis=-1)            # (B, J)
    return norms.sum() * (1.0 / (b * j * t))


def generator_loss(out: models.GeneratorOutput, clips,
                   disc: models.MotionDiscriminator, weights: LossWeights,
                   enable_reg: bool = True, enable_adv: bool = True,
                   tree: skeleton.KinematicTree | None = None):
    """Total generator loss plus a per-term breakdown.

    ``clips`` may be one TrainingClip or a list matching the batched output.
    Returns (total tensor, breakdown dict); breakdown carries unweighted and
    weighted values per term, and the weighted ones sum to the total.
    ``enable_adv=False`` drops the adversarial term entirely (the pure
    frame-wise baseline trains without a motion prior).
    """
    out, clips = _as_batch(out, clips)
    tree = tree or skeleton.default_tree()
    intr = clips[0].intrinsics

    gt3d = np.stack([c.gt_keypoints_3d for c in clips]) / 1000.0
    gt3d_centered = gt3d - gt3d[:, :, 0:1, :]
    gt2d = np.stack([c.gt_keypoints_2d for c in clips])
    gt_rotmats = np.stack(
        [rot3.axis_angle_to_matrix(c.gt_motion.pose_array()) for c in clips])
    gt_beta = np.stack([c.gt_motion.shape.beta for c in clips])

    pred3d = models.fk_rotmats_tensor(tree, out.rotmats, out.beta)
    pred2d = models.project_tensor(pred3d, out.trans, intr.f, intr.res)

    terms = {}
    terms["l_3d"] = mse(pred3d, tape.const(gt3d_centered))
    terms["l_2d"] = mse(pred2d, tape.const(gt2d))
    terms["l_smpl_pose"] = mse(out.rotmats, tape.const(gt_rotmats))
    terms["l_smpl_beta"] = mse(out.beta, tape.const(gt_beta))

    weight_of = {
        "l_3d": weights.lambda_3d, "l_2d": weights.lambda_2d,
        "l_smpl_pose": weights.lambda_smpl_pose,
        "l_smpl_beta": weights.lambda_smpl_beta,
    }
    if enable_adv:
        score = disc.forward(models.rotmats_to_sixd_tensor(out.rotmats),
                             trainable=False)
        delta = score - 1.0
        terms["l_adv"] = (delta * delta).mean()
        weight_of["l_adv"] = weights.lambda_adv
    if enable_reg and weights.lambda_reg != 0.0:
        terms["l_reg"] = feature_regularizer(out)
        weight_of["l_reg"] = weights.lambda_reg

    total = None
    breakdown = {}
    for name, term in terms.items():
        weighted = term * weight_of[name]
        total = weighted if total is None else total + weighted
        breakdown[name] = term.item()
        breakdown[f"{name}_weighted"] = weighted.item()
    breakdown["total"] = total.item()
    return total, breakdown


def discriminator_loss(disc: models.MotionDiscriminator, real_batch, fake_batch,
                       literal: bool = False) -> tape.Tensor:
    """Least-squares objective on detached pose batches (N, T, J, 6).

    Standard assignment: E[(D(real) - 1)^2] + E[D(fake)^2]. The ``literal``
    switch applies the targets the other way around, for comparison runs.
    """
    real = np.asarray(real_batch, dtype=np.float64)
    fake = np.asarray(fake_batch, dtype=np.float64)
    if real.ndim != 4 or fake.ndim != 4 or real.shape[1:] != fake.shape[1:]:
        raise ShapeMismatch(f"pose batches shaped {real.shape} vs {fake.shape}")
    score_real = disc.forward(tape.const(real))
    score_fake = disc.forward(tape.const(fake))
    if literal:
        score_real, score_fake = score_fake, score_real
    dr = score_real - 1.0
    return (dr * dr).mean() + (score_fake * score_fake).mean()
