"""Text file formats: motion sequences, observation files, configs, reports.

Motion files (``.mseq``) are line oriented: a header ``MSEQ v1 T=<n> J=24
fps=<r>``, one line per frame with 24 axis-angle triples then the root
translation (75 numbers, 17 significant digits), and a trailing ``BETA`` line
with the 10 shape coefficients. Observations live in a sibling ``.obs`` file:
header ``OBS v1`` with camera metadata, then per frame the 24 noisy
(u, v, confidence) triples followed by the 24 clean (u, v) pairs.

Configs are flat ``key = value`` text; unknown keys are an error. Reports are
JSON with sorted keys, so identical runs serialize byte-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import camera, skeleton, synthmotion
from ..errors import ConfigError
from .losses import LossWeights
from .train import TrainConfig

_FMT = "%.17g"
_J = skeleton.NUM_JOINTS


def _fmt_row(values) -> str:
    return " ".join(_FMT % v for v in np.asarray(values).ravel())


def _parse_row(line: str) -> np.ndarray:
    return np.array(line.split(), dtype=np.float64)


def write_motion(path, seq: skeleton.MotionSequence) -> None:
    lines = [f"MSEQ v1 T={len(seq)} J={_J} fps={_FMT % seq.frame_rate}"]
    pose = seq.pose_array()
    trans = seq.trans_array()
    for t in range(len(seq)):
        lines.append(_fmt_row(np.concatenate([pose[t].ravel(), trans[t]])))
    lines.append("BETA " + _fmt_row(seq.shape.beta))
    Path(path).write_text("\n".join(lines) + "\n")


def read_motion(path) -> skeleton.MotionSequence:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split()
    if header[:2] != ["MSEQ", "v1"]:
        raise ConfigError(f"{path}: bad motion header {lines[0]!r}")
    fields = dict(kv.split("=") for kv in header[2:])
    frames = int(fields["T"])
    joints = int(fields["J"])
    fps = float(fields["fps"])
    if joints != _J:
        raise ConfigError(f"{path}: expected J={_J}, got {joints}")
    if len(lines) != frames + 2:
        raise ConfigError(f"{path}: expected {frames + 2} lines, got {len(lines)}")
    pose = np.empty((frames, _J, 3))
    trans = np.empty((frames, 3))
    for t in range(frames):
        row = _parse_row(lines[1 + t])
        if row.size != _J * 3 + 3:
            raise ConfigError(f"{path}: frame {t} has {row.size} values")
        pose[t] = row[:_J * 3].reshape(_J, 3)
        trans[t] = row[_J * 3:]
    beta_line = lines[frames + 1].split(maxsplit=1)
    if beta_line[0] != "BETA":
        raise ConfigError(f"{path}: missing BETA footer")
    beta = _parse_row(beta_line[1])
    return skeleton.MotionSequence.from_arrays(pose, trans, beta, fps)


def write_obs(path, clip: synthmotion.TrainingClip) -> None:
    intr = clip.intrinsics
    cam = clip.gt_weak_cam
    header = (f"OBS v1 T={len(clip)} J={_J} res={intr.res} "
              f"focal={_FMT % intr.f} noise={_FMT % clip.noise_px} "
              f"s={_FMT % cam.s} tx={_FMT % cam.t_x} ty={_FMT % cam.t_y} "
              f"seed={clip.seed}")
    lines = [header]
    for t in range(len(clip)):
        row = np.concatenate([clip.observations[t].ravel(),
                              clip.gt_keypoints_2d[t].ravel()])
        lines.append(_fmt_row(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_obs(path) -> dict:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split()
    if header[:2] != ["OBS", "v1"]:
        raise ConfigError(f"{path}: bad observation header {lines[0]!r}")
    fields = dict(kv.split("=") for kv in header[2:])
    frames = int(fields["T"])
    obs = np.empty((frames, _J, 3))
    gt2d = np.empty((frames, _J, 2))
    for t in range(frames):
        row = _parse_row(lines[1 + t])
        if row.size != _J * 5:
            raise ConfigError(f"{path}: frame {t} has {row.size} values")
        obs[t] = row[:_J * 3].reshape(_J, 3)
        gt2d[t] = row[_J * 3:].reshape(_J, 2)
    return {
        "observations": obs,
        "gt_keypoints_2d": gt2d,
        "intrinsics": camera.CameraIntrinsics(f=float(fields["focal"]),
                                              res=int(fields["res"])),
        "gt_weak_cam": camera.WeakCamera(s=float(fields["s"]),
                                         t_x=float(fields["tx"]),
                                         t_y=float(fields["ty"])),
        "noise_px": float(fields["noise"]),
        "seed": int(fields.get("seed", -1)),
    }


def write_clip(directory, stem: str, clip: synthmotion.TrainingClip) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_motion(directory / f"{stem}.mseq", clip.gt_motion)
    write_obs(directory / f"{stem}.obs", clip)


def read_clip(directory, stem: str,
              tree: skeleton.KinematicTree | None = None) -> synthmotion.TrainingClip:
    """Rebuild a TrainingClip from its file pair.

    3D keypoints are recomputed from the motion; the stored 2D keypoints are
    cross-checked against reprojection to catch mismatched file pairs.
    """
    directory = Path(directory)
    motion = read_motion(directory / f"{stem}.mseq")
    data = read_obs(directory / f"{stem}.obs")
    tree = tree or skeleton.default_tree()
    kp3d_m = skeleton.sequence_keypoints(tree, motion)
    base = camera.recover_translation(data["gt_weak_cam"], data["intrinsics"])
    reproj = camera.project(kp3d_m, data["intrinsics"], base)
    err = np.abs(reproj - data["gt_keypoints_2d"]).max()
    if err > 1e-6:
        raise ConfigError(f"{stem}: stored 2D disagrees with reprojection "
                          f"by {err:.3e} px")
    return synthmotion.TrainingClip(
        gt_motion=motion,
        gt_keypoints_3d=kp3d_m * 1000.0,
        gt_keypoints_2d=data["gt_keypoints_2d"],
        observations=data["observations"],
        intrinsics=data["intrinsics"],
        gt_weak_cam=data["gt_weak_cam"],
        noise_px=data["noise_px"],
        seed=data["seed"],
    )


def read_clip_dir(directory) -> list:
    """Load every ``*.mseq``/``*.obs`` pair in a directory, sorted by stem."""
    directory = Path(directory)
    stems = sorted(p.stem for p in directory.glob("*.mseq"))
    if not stems:
        raise ConfigError(f"{directory}: no .mseq files found")
    return [read_clip(directory, stem) for stem in stems]


# --- configs ---------------------------------------------------------------

_CONFIG_TYPES = {}
for _name, _field in TrainConfig.__dataclass_fields__.items():
    _CONFIG_TYPES[_name] = _field.type
for _name in LossWeights.__dataclass_fields__:
    _CONFIG_TYPES[_name] = "float"

_BOOL_WORDS = {"true": True, "1": True, "yes": True,
               "false": False, "0": False, "no": False}


def _parse_value(key: str, raw: str):
    kind = _CONFIG_TYPES[key]
    if kind == "bool":
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[word]
    if kind == "int":
        return int(raw)
    return float(raw)


def parse_config(text: str) -> tuple[TrainConfig, LossWeights]:
    """Parse flat ``key = value`` text into a config and loss weights."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)

    cfg_kwargs = {k: v for k, v in values.items()
                  if k in TrainConfig.__dataclass_fields__}
    weight_kwargs = {k: v for k, v in values.items()
                     if k in LossWeights.__dataclass_fields__}
    return TrainConfig(**cfg_kwargs), LossWeights(**weight_kwargs)


def read_config(path) -> tuple[TrainConfig, LossWeights]:
    return parse_config(Path(path).read_text())


def format_config(cfg: TrainConfig, weights: LossWeights) -> str:
    lines = [f"{k} = {v}" for k, v in cfg.to_dict().items()]
    lines += [f"{k} = {v}" for k, v in weights.to_dict().items()]
    return "\n".join(lines) + "\n"


# --- reports and curves ----------------------------------------------------

def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())


CURVE_COLUMNS = ("iteration", "total", "l_3d", "l_2d", "l_smpl_pose",
                 "l_smpl_beta", "l_adv", "l_reg", "d_loss")


def write_curves(path, curves: list) -> None:
    """Per-iteration loss curves as CSV; absent terms stay empty."""
    lines = [",".join(CURVE_COLUMNS)]
    for row in curves:
        cells = []
        for col in CURVE_COLUMNS:
            value = row.get(col)
            if value is None:
                cells.append("")
            elif col == "iteration":
                cells.append(str(value))
            else:
                cells.append(_FMT % value)
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
