"""Synthetic motion families and training clips.

Three parametric families drive the 24 joints with per-joint sinusoids about
fixed anatomical axes: a walk-like gait (coherent left/right antiphase, root
drifting at constant velocity), a wave-like arm gesture, and a low-amplitude
idle sway. Smoothness is the defining feature of this "real" motion, which is
exactly what the adversarial prior is supposed to pick up.

A training clip packs the ground-truth motion with camera geometry and noisy
2D observations: per joint (u, v, confidence), where the confidence encodes
the actual noise magnitude the way a keypoint detector's score would.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import camera, skeleton

FAMILIES = ("walk-like", "wave-like", "idle-sway")

WINDOW = 16

# Anatomical rotation axis per joint (x: flexion, y: twist, z: swing).
_AXIS_X = (1.0, 0.0, 0.0)
_AXIS_Y = (0.0, 1.0, 0.0)
_AXIS_Z = (0.0, 0.0, 1.0)
JOINT_AXES = np.array([
    _AXIS_Z,  # pelvis
    _AXIS_X, _AXIS_X,  # hips
    _AXIS_X,           # spine1
    _AXIS_X, _AXIS_X,  # knees
    _AXIS_X,           # spine2
    _AXIS_X, _AXIS_X,  # ankles
    _AXIS_X,           # spine3
    _AXIS_X, _AXIS_X,  # feet
    _AXIS_X,           # neck
    _AXIS_Z, _AXIS_Z,  # collars
    _AXIS_X,           # head
    _AXIS_Z, _AXIS_Z,  # shoulders
    _AXIS_Y, _AXIS_Y,  # elbows
    _AXIS_Y, _AXIS_Y,  # wrists
    _AXIS_Y, _AXIS_Y,  # hands
])

_J = skeleton.NUM_JOINTS

# seed offsets keeping the rng streams of one dataset disjoint
_EVAL_OFFSET = 100_000
_REAL_OFFSET = 200_000
_NOISE_OFFSET = 10_000_000
_SPLIT_STRIDE = 10 ** 8
_MAX_CLIPS = _EVAL_OFFSET


@dataclass(frozen=True)
class MotionFamilyConfig:
    """Per-joint sinusoid parameters for one sampled motion."""

    family: str
    amplitude: np.ndarray        # (24,) radians, <= pi/2
    frequency: np.ndarray        # (24,) Hz, in (0, frame_rate/4]
    phase: np.ndarray            # (24,) radians
    seed: int
    frame_rate: float = 25.0
    root_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m/s
    beta: np.ndarray = field(default_factory=lambda: np.zeros(skeleton.NUM_SHAPE))

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        amp = np.asarray(self.amplitude, dtype=np.float64)
        freq = np.asarray(self.frequency, dtype=np.float64)
        if np.any(amp > np.pi / 2 + 1e-12) or np.any(amp < 0):
            raise ValueError("amplitudes must lie in [0, pi/2]")
        if np.any(freq <= 0) or np.any(freq > self.frame_rate / 4 + 1e-12):
            raise ValueError("frequencies must lie in (0, frame_rate/4]")
        if np.any(np.abs(np.asarray(self.beta)) > 5.0):
            raise ValueError("|beta| must not exceed 5")
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "frequency", freq)
        object.__setattr__(self, "phase", np.asarray(self.phase, dtype=np.float64))
        object.__setattr__(self, "root_velocity",
                           np.asarray(self.root_velocity, dtype=np.float64))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64))


@dataclass(frozen=True)
class TrainingClip:
    """One supervised window: ground truth plus noisy observations."""

    gt_motion: skeleton.MotionSequence
    gt_keypoints_3d: np.ndarray   # (T, 24, 3) mm, motion drift included
    gt_keypoints_2d: np.ndarray   # (T, 24, 2) px
    observations: np.ndarray      # (T, 24, 3) = (u, v, confidence)
    intrinsics: camera.CameraIntrinsics
    gt_weak_cam: camera.WeakCamera
    noise_px: float
    seed: int                     # the observation-noise seed
    config: MotionFamilyConfig | None = None

    def __len__(self) -> int:
        return self.gt_keypoints_3d.shape[0]


_L = {name: i for i, name in enumerate(skeleton.JOINT_NAMES)}


def family_config(family: str, seed: int, frame_rate: float = 25.0) -> MotionFamilyConfig:
    """Draw one motion's per-joint sinusoid parameters for a family."""
    rng = np.random.default_rng(seed)
    amp = np.zeros(_J)
    freq = np.full(_J, 0.4)
    phase = rng.uniform(0.0, 2 * np.pi, _J)
    velocity = np.zeros(3)

    if family == "walk-like":
        gait = rng.uniform(1.0, 2.6)
        freq[:] = gait
        left_phase = rng.uniform(0.0, 2 * np.pi)
        for side, base in (("left", left_phase), ("right", left_phase + np.pi)):
            amp[_L[f"{side}_hip"]] = rng.uniform(0.25, 0.55)
            phase[_L[f"{side}_hip"]] = base
            amp[_L[f"{side}_knee"]] = rng.uniform(0.3, 0.7)
            phase[_L[f"{side}_knee"]] = base + rng.uniform(1.2, 2.0)
            amp[_L[f"{side}_ankle"]] = rng.uniform(0.1, 0.35)
            phase[_L[f"{side}_ankle"]] = base + rng.uniform(2.4, 3.4)
            amp[_L[f"{side}_foot"]] = rng.uniform(0.04, 0.14)
            # arms swing against the same-side leg
            amp[_L[f"{side}_shoulder"]] = rng.uniform(0.1, 0.35)
            phase[_L[f"{side}_shoulder"]] = base + np.pi
            amp[_L[f"{side}_elbow"]] = rng.uniform(0.05, 0.25)
            phase[_L[f"{side}_elbow"]] = base + np.pi + rng.uniform(0.1, 0.8)
            amp[_L[f"{side}_collar"]] = rng.uniform(0.02, 0.06)
            amp[_L[f"{side}_wrist"]] = rng.uniform(0.02, 0.1)
            amp[_L[f"{side}_hand"]] = rng.uniform(0.01, 0.05)
        for name in ("pelvis", "spine1", "spine2", "spine3", "neck", "head"):
            amp[_L[name]] = rng.uniform(0.02, 0.08)
            freq[_L[name]] = 2.0 * gait  # trunk bounces once per step
        velocity[0] = rng.choice([-1.0, 1.0]) * rng.uniform(0.25, 0.7)
    elif family == "wave-like":
        wave = rng.uniform(1.5, 3.0)
        amp[:] = rng.uniform(0.01, 0.06, _J)
        freq[:] = rng.uniform(0.3, 0.8, _J)
        side = "right" if rng.uniform() < 0.5 else "left"
        for name, lo, hi in ((f"{side}_shoulder", 0.4, 0.85),
                             (f"{side}_elbow", 0.3, 0.7),
                             (f"{side}_wrist", 0.1, 0.35)):
            amp[_L[name]] = rng.uniform(lo, hi)
            freq[_L[name]] = wave
    elif family == "idle-sway":
        amp[:] = rng.uniform(0.02, 0.1, _J)
        freq[:] = rng.uniform(0.2, 0.8, _J)
    else:
        raise ValueError(f"unknown family {family!r}")

    beta = rng.uniform(-2.0, 2.0, skeleton.NUM_SHAPE)
    return MotionFamilyConfig(
        family=family, amplitude=amp, frequency=freq, phase=phase, seed=seed,
        frame_rate=frame_rate, root_velocity=velocity, beta=beta)


def sample_motion(cfg: MotionFamilyConfig, frames: int) -> skeleton.MotionSequence:
    """Evaluate the config's sinusoids over ``frames`` frames.

    Joint j at frame t rotates about its fixed axis by
    amplitude_j * sin(2 pi freq_j t / fps + phase_j); the root drifts at the
    config's constant velocity. Fully deterministic from the config.
    """
    t = np.arange(frames, dtype=np.float64)
    angles = cfg.amplitude[None, :] * np.sin(
        2.0 * np.pi * cfg.frequency[None, :] * t[:, None] / cfg.frame_rate
        + cfg.phase[None, :])
    pose = angles[:, :, None] * JOINT_AXES[None, :, :]
    trans = (t / cfg.frame_rate)[:, None] * cfg.root_velocity[None, :]
    return skeleton.MotionSequence.from_arrays(pose, trans, cfg.beta, cfg.frame_rate)


def synthesize_clip(cfg: MotionFamilyConfig, intr: camera.CameraIntrinsics,
                    noise_px: float, seed: int, frames: int = WINDOW,
                    tree: skeleton.KinematicTree | None = None) -> TrainingClip:
    """Render one clip: motion, camera, clean 2D, and noisy observations."""
    if noise_px < 0:
        raise ValueError("noise_px must be >= 0")
    tree = tree or skeleton.default_tree()
    motion = sample_motion(cfg, frames)
    kp3d_m = skeleton.sequence_keypoints(tree, motion)

    rng = np.random.default_rng(seed)
    cam = camera.WeakCamera(
        s=rng.uniform(0.9, 1.15),
        t_x=rng.uniform(-0.15, 0.15),
        t_y=rng.uniform(-0.15, 0.15),
    )
    base = camera.recover_translation(cam, intr)
    gt2d = camera.project(kp3d_m, intr, base)

    if noise_px > 0:
        noise = rng.normal(0.0, noise_px, size=gt2d.shape)
        conf = np.exp(-np.sum(noise * noise, axis=-1) / (2.0 * noise_px ** 2))
    else:
        noise = np.zeros_like(gt2d)
        conf = np.ones(gt2d.shape[:-1])
    observations = np.concatenate([gt2d + noise, conf[..., None]], axis=-1)

    return TrainingClip(
        gt_motion=motion,
        gt_keypoints_3d=kp3d_m * 1000.0,
        gt_keypoints_2d=gt2d,
        observations=observations,
        intrinsics=intr,
        gt_weak_cam=cam,
        noise_px=float(noise_px),
        seed=int(seed),
        config=cfg,
    )


@dataclass(frozen=True)
class Dataset:
    """Seed-disjoint train/eval clips plus a pool of real motions."""

    train: tuple
    eval: tuple
    real_pool: tuple  # MotionSequence samples for the discriminator


def make_dataset(n_clips: int, split_seed: int,
                 intr: camera.CameraIntrinsics | None = None,
                 noise_px: float = 3.0, frames: int = WINDOW,
                 frame_rate: float = 25.0, real_pool: int | None = None) -> Dataset:
    """Build an 80/20 train/eval split plus a real-motion pool.

    Clip and pool seeds are distinct integers derived from split_seed, so the
    three groups never share a random stream.
    """
    if n_clips < 2:
        raise ValueError("need at least 2 clips for a split")
    if n_clips > _MAX_CLIPS:
        raise ValueError(f"n_clips capped at {_MAX_CLIPS}")
    intr = intr or camera.CameraIntrinsics()
    n_train = int(round(0.8 * n_clips))
    n_eval = n_clips - n_train
    n_real = real_pool if real_pool is not None else n_clips
    base = split_seed * _SPLIT_STRIDE

    def clip(seed_val, idx):
        cfg = family_config(FAMILIES[idx % 3], seed_val, frame_rate)
        return synthesize_clip(cfg, intr, noise_px, seed_val + _NOISE_OFFSET, frames)

    train = tuple(clip(base + i, i) for i in range(n_train))
    evals = tuple(clip(base + _EVAL_OFFSET + i, i) for i in range(n_eval))
    real = tuple(
        sample_motion(family_config(FAMILIES[i % 3], base + _REAL_OFFSET + i, frame_rate),
                      frames)
        for i in range(n_real))
    return Dataset(train=train, eval=evals, real_pool=real)
