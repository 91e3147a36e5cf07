"""Adversarial training loop, evaluation, and the three-variant ablation.

One iteration: sample a clip batch, run the generator, backprop the five-term
loss, Adam-step the generator. Every ``disc_update_every``-th iteration the
discriminator takes its own Adam step on real motions vs the current
(detached) fakes. Everything is driven by explicitly seeded generators, so a
config + seed pins every float in the run.

Variants: ``baseline`` bypasses the GRUs (regressor heads read frame-wise
features), ``sep_t`` enables the temporal encoders, ``sep_t_reg`` adds the
feature-consistency term.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .. import camera, metrics, models, rot3, skeleton, synthmotion
from ..errors import NonFiniteLoss
from ..gradcore import AdamState, adam_step, all_blocks, tape, zero_grads
from .losses import LossWeights, discriminator_loss, generator_loss

VARIANTS = ("baseline", "sep_t", "sep_t_reg")


@dataclass(frozen=True)
class TrainConfig:
    window: int = 16
    batch_size: int = 2
    iterations: int = 2000
    clips: int = 80                 # split 80/20 into train/eval
    noise_px: float = 3.0
    seed: int = 0
    disc_update_every: int = 5
    frame_rate: float = 25.0
    focal: float = 5000.0
    res: int = 224
    real_pool: int = 24
    real_batch: int = 16
    lsgan_literal: bool = False
    frame_wise_baseline: bool = False
    enable_temporal: bool = True
    enable_reg: bool = True

    def __post_init__(self):
        if self.disc_update_every < 1:
            raise ValueError("disc_update_every must be >= 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @property
    def frame_wise(self) -> bool:
        return self.frame_wise_baseline or not self.enable_temporal


def variant_config(cfg: TrainConfig, variant: str) -> TrainConfig:
    """Apply one ablation variant's flag combination."""
    if variant == "baseline":
        return replace(cfg, frame_wise_baseline=True, enable_temporal=False,
                       enable_reg=False)
    if variant == "sep_t":
        return replace(cfg, frame_wise_baseline=False, enable_temporal=True,
                       enable_reg=False)
    if variant == "sep_t_reg":
        return replace(cfg, frame_wise_baseline=False, enable_temporal=True,
                       enable_reg=True)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def config_hash(cfg: TrainConfig, weights: LossWeights) -> str:
    payload = json.dumps([cfg.to_dict(), weights.to_dict()], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_dataset(cfg: TrainConfig) -> synthmotion.Dataset:
    intr = camera.CameraIntrinsics(f=cfg.focal, res=cfg.res)
    return synthmotion.make_dataset(
        cfg.clips, split_seed=cfg.seed, intr=intr, noise_px=cfg.noise_px,
        frames=cfg.window, frame_rate=cfg.frame_rate, real_pool=cfg.real_pool)


def build_models(cfg: TrainConfig):
    gen = models.Generator(models.GeneratorConfig(
        res=cfg.res, focal=cfg.focal, seed=1000 * cfg.seed + 1))
    disc = models.MotionDiscriminator(
        models.DiscriminatorConfig(seed=1000 * cfg.seed + 2))
    return gen, disc


def motion_to_sixd(seq: skeleton.MotionSequence) -> np.ndarray:
    """(T, J, 6) rotmat-derived 6D view of a motion's joint rotations."""
    return rot3.matrix_to_sixd(rot3.axis_angle_to_matrix(seq.pose_array()))


@dataclass
class TrainResult:
    generator: models.Generator
    discriminator: models.MotionDiscriminator
    config: TrainConfig
    weights: LossWeights
    curves: list = field(default_factory=list)    # one dict per iteration
    final_losses: dict = field(default_factory=dict)

    def checkpoint_blocks(self):
        return all_blocks(self.generator.slots() + self.discriminator.slots())

    def manifest_extra(self, variant: str = "") -> dict:
        return {
            "arch": {**self.generator.manifest(), **self.discriminator.manifest()},
            "variant": variant,
            "train_config": self.config.to_dict(),
            "loss_weights": self.weights.to_dict(),
        }


def _check_finite(value: float, iteration: int, term: str) -> None:
    if not np.isfinite(value):
        raise NonFiniteLoss(f"iteration {iteration}: {term} = {value}")


def train(cfg: TrainConfig, data: synthmotion.Dataset,
          weights: LossWeights | None = None) -> TrainResult:
    """Run the adversarial loop; deterministic given (cfg, data)."""
    weights = weights or LossWeights()
    gen, disc = build_models(cfg)
    tree = skeleton.default_tree()
    opt_g = AdamState(gen.trainable_slots(cfg.frame_wise))
    opt_d = AdamState(disc.slots())
    rng = np.random.default_rng(1000 * cfg.seed + 3)

    train_obs = np.stack([c.observations for c in data.train])
    real_sixd = np.stack([motion_to_sixd(m) for m in data.real_pool])
    result = TrainResult(gen, disc, cfg, weights)

    # the frame-wise baseline mirrors a pure per-frame estimator: it trains
    # with no motion prior, so the adversarial term and the discriminator
    # updates are skipped entirely
    adversarial = not cfg.frame_wise

    for it in range(1, cfg.iterations + 1):
        idx = rng.integers(0, len(data.train), size=cfg.batch_size)
        clips = [data.train[i] for i in idx]
        fv = gen.encode_observations(train_obs[idx])
        out = gen.forward(fv, frame_wise=cfg.frame_wise)
        total, breakdown = generator_loss(
            out, clips, disc, weights, enable_reg=cfg.enable_reg,
            enable_adv=adversarial, tree=tree)
        for name, value in breakdown.items():
            _check_finite(value, it, name)
        tape.backward(total)
        adam_step(opt_g)

        row = {"iteration": it, **breakdown}
        if adversarial and it % cfg.disc_update_every == 0:
            fake_sixd = rot3.matrix_to_sixd(out.rotmats.value)
            ridx = rng.integers(0, len(real_sixd), size=cfg.real_batch)
            d_total = discriminator_loss(disc, real_sixd[ridx], fake_sixd,
                                         literal=cfg.lsgan_literal)
            _check_finite(d_total.item(), it, "d_loss")
            row["d_loss"] = d_total.item()
            tape.backward(d_total)
            adam_step(opt_d)
        result.curves.append(row)

    zero_grads(gen.slots() + disc.slots())
    result.final_losses = {k: v for k, v in result.curves[-1].items()
                           if k != "iteration"} if result.curves else {}
    return result


def _centered(positions: np.ndarray) -> np.ndarray:
    return positions - positions[:, 0:1, :]


def predict_keypoints(gen: models.Generator, clip: synthmotion.TrainingClip,
                      frame_wise: bool, tree: skeleton.KinematicTree) -> np.ndarray:
    """Root-centered predicted keypoints for one clip, millimeters."""
    fv = gen.encode_observations(clip.observations[None])
    out = gen.forward(fv, frame_wise=frame_wise)
    rotm = out.rotmats.value[0]
    beta = out.beta.value[0]
    pred_m = skeleton.fk_rotmats(tree, rotm, np.zeros(3), beta)
    return pred_m * 1000.0


def observation_oracle_keypoints(clip: synthmotion.TrainingClip) -> np.ndarray:
    """Back-project the noisy observations at ground-truth depth, mm.

    A frame-wise estimator cannot beat this: it sees exactly the observation
    noise lifted into 3D with oracle depth and camera.
    """
    intr = clip.intrinsics
    base = camera.recover_translation(clip.gt_weak_cam, intr)
    gt_m = clip.gt_keypoints_3d / 1000.0
    z = gt_m[..., 2] + base[2]
    uv = clip.observations[..., :2]
    x = (uv[..., 0] - intr.res / 2.0) * z / intr.f - base[0]
    y = (uv[..., 1] - intr.res / 2.0) * z / intr.f - base[1]
    oracle = np.stack([x, y, gt_m[..., 2]], axis=-1) * 1000.0
    return _centered(oracle)


def evaluate(gen: models.Generator, eval_clips, frame_wise: bool = False,
             tree: skeleton.KinematicTree | None = None) -> dict:
    """All four metrics (averaged over clips) plus the observation oracle."""
    tree = tree or skeleton.default_tree()
    model_reports = []
    oracle_reports = []
    for clip in eval_clips:
        gt = _centered(clip.gt_keypoints_3d)
        pred = predict_keypoints(gen, clip, frame_wise, tree)
        model_reports.append(metrics.report(pred, gt))
        oracle_reports.append(metrics.report(observation_oracle_keypoints(clip), gt))

    def average(reports):
        return metrics.MetricReport(
            mpjpe=float(np.mean([r.mpjpe for r in reports])),
            pa_mpjpe=float(np.mean([r.pa_mpjpe for r in reports])),
            acc=float(np.mean([r.acc for r in reports])),
            acc_err=float(np.mean([r.acc_err for r in reports])),
        )

    return {"model": average(model_reports),
            "observation_oracle": average(oracle_reports)}


def run_ablation(base_cfg: TrainConfig, weights: LossWeights | None = None,
                 variants=VARIANTS) -> dict:
    """Train and evaluate every variant on identical data and seeds.

    Returns {"config": ..., "data_digest": ..., "variants": {name: {...}}}
    with per-variant metric reports, final losses, and the TrainResult.
    """
    weights = weights or LossWeights()
    data = build_dataset(base_cfg)
    digest = hashlib.sha256()
    for clip in data.eval:
        digest.update(clip.gt_keypoints_3d.tobytes())
        digest.update(clip.observations.tobytes())

    report = {
        "seed": base_cfg.seed,
        "config": base_cfg.to_dict(),
        "loss_weights": weights.to_dict(),
        "config_hash": config_hash(base_cfg, weights),
        "eval_data_sha256": digest.hexdigest(),
        "variants": {},
    }
    results = {}
    for variant in variants:
        cfg = variant_config(base_cfg, variant)
        result = train(cfg, data, weights)
        scores = evaluate(result.generator, data.eval, frame_wise=cfg.frame_wise)
        report["variants"][variant] = {
            "metrics": scores["model"].to_dict(),
            "observation_oracle": scores["observation_oracle"].to_dict(),
            "final_losses": result.final_losses,
        }
        results[variant] = result
    return {"report": report, "results": results, "data": data}
