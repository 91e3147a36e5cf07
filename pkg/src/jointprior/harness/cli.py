"""Command-line interface.

Subcommands: ``gen-data`` writes clip files, ``train`` runs one variant,
``eval`` scores a checkpoint against clip files, ``ablate`` runs the full
three-variant comparison, ``check-grad`` runs the finite-difference suite.
"""

import os

# stacked GEMMs this size run faster (and exactly reproducibly) on one thread;
# must be set before numpy initializes its thread pools
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import models
from ..gradcore import (all_blocks, load_checkpoint, restore_blocks,
                        save_checkpoint)
from . import fileio
from .gradsuite import run_gradient_suite
from .losses import LossWeights
from .train import (TrainConfig, VARIANTS, build_dataset, config_hash,
                    evaluate, run_ablation, train, variant_config)


def _apply_camera_overrides(cfg: TrainConfig, args) -> TrainConfig:
    updates = {}
    if args.focal is not None:
        updates["focal"] = args.focal
    if args.res is not None:
        updates["res"] = args.res
    return replace(cfg, **updates) if updates else cfg


def cmd_gen_data(args) -> int:
    cfg = TrainConfig(clips=args.clips, noise_px=args.noise_px, seed=args.seed)
    cfg = _apply_camera_overrides(cfg, args)
    data = build_dataset(cfg)
    out = Path(args.out)
    for i, clip in enumerate(data.train):
        fileio.write_clip(out, f"train_{i:04d}", clip)
    for i, clip in enumerate(data.eval):
        fileio.write_clip(out, f"eval_{i:04d}", clip)
    print(f"wrote {len(data.train)} train + {len(data.eval)} eval clips to {out}")
    return 0


def _load_config(args) -> tuple[TrainConfig, LossWeights]:
    if args.config:
        cfg, weights = fileio.read_config(args.config)
    else:
        cfg, weights = TrainConfig(), LossWeights()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return _apply_camera_overrides(cfg, args), weights


def _save_result(out_dir: Path, variant: str, result) -> Path:
    path = out_dir / f"checkpoint_{variant}.bin"
    save_checkpoint(path, result.checkpoint_blocks(), seed=result.config.seed,
                    step=result.config.iterations,
                    extra=result.manifest_extra(variant))
    fileio.write_curves(out_dir / f"curves_{variant}.csv", result.curves)
    return path


def cmd_train(args) -> int:
    cfg, weights = _load_config(args)
    cfg = variant_config(cfg, args.variant)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    data = build_dataset(cfg)
    result = train(cfg, data, weights)
    scores = evaluate(result.generator, data.eval, frame_wise=cfg.frame_wise)
    elapsed = time.perf_counter() - started

    report = {
        "variant": args.variant,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg, weights),
        "metrics": scores["model"].to_dict(),
        "observation_oracle": scores["observation_oracle"].to_dict(),
        "final_losses": result.final_losses,
    }
    fileio.write_report(out_dir / f"report_{args.variant}.json", report)
    path = _save_result(out_dir, args.variant, result)
    (out_dir / "timing.txt").write_text(f"train {args.variant}: {elapsed:.1f}s\n")
    print(f"{args.variant}: mpjpe={scores['model'].mpjpe:.1f}mm "
          f"acc_err={scores['model'].acc_err:.2f}mm/f^2 -> {path}")
    return 0


def cmd_eval(args) -> int:
    manifest, arrays = load_checkpoint(args.checkpoint)
    extra = manifest["extra"]
    gen_cfg = models.GeneratorConfig(**extra["arch"]["generator"])
    disc_cfg = models.DiscriminatorConfig(**extra["arch"]["discriminator"])
    gen = models.Generator(gen_cfg)
    disc = models.MotionDiscriminator(disc_cfg)
    restore_blocks(all_blocks(gen.slots() + disc.slots()), arrays)

    clips = fileio.read_clip_dir(args.data)
    frame_wise = TrainConfig(**extra["train_config"]).frame_wise
    scores = evaluate(gen, clips, frame_wise=frame_wise)
    report = {
        "checkpoint": str(args.checkpoint),
        "variant": extra.get("variant", ""),
        "n_clips": len(clips),
        "metrics": scores["model"].to_dict(),
        "observation_oracle": scores["observation_oracle"].to_dict(),
    }
    fileio.write_report(args.report, report)
    print(f"evaluated {len(clips)} clips: mpjpe={scores['model'].mpjpe:.1f}mm "
          f"pa_mpjpe={scores['model'].pa_mpjpe:.1f}mm "
          f"acc_err={scores['model'].acc_err:.2f}mm/f^2")
    return 0


def cmd_ablate(args) -> int:
    cfg, weights = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outcome = run_ablation(cfg, weights)
    elapsed = time.perf_counter() - started

    fileio.write_report(out_dir / "report.json", outcome["report"])
    for variant, result in outcome["results"].items():
        _save_result(out_dir, variant, result)
    (out_dir / "timing.txt").write_text(f"ablate: {elapsed:.1f}s\n")

    print(f"{'variant':12s} {'MPJPE':>8s} {'PA-MPJPE':>9s} {'ACC':>8s} {'ACC-ERR':>8s}")
    for variant in VARIANTS:
        m = outcome["report"]["variants"][variant]["metrics"]
        print(f"{variant:12s} {m['mpjpe']:8.2f} {m['pa_mpjpe']:9.2f} "
              f"{m['acc']:8.2f} {m['acc_err']:8.2f}")
    return 0


def cmd_check_grad(args) -> int:
    rows = run_gradient_suite(seed=args.seed, verbose=True)
    worst = max(r["max_rel_err"] for r in rows)
    print(f"worst relative error: {worst:.3e} (tolerance 1e-5)")
    return 0 if worst < 1e-5 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointprior",
        description="Per-joint motion priors for video pose estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_camera(p):
        p.add_argument("--focal", type=float, default=None,
                       help="focal length in pixels (default 5000)")
        p.add_argument("--res", type=int, default=None,
                       help="image resolution in pixels (default 224)")

    p = sub.add_parser("gen-data", help="write synthetic clip files")
    p.add_argument("--out", required=True)
    p.add_argument("--clips", type=int, default=80)
    p.add_argument("--noise-px", type=float, default=3.0, dest="noise_px")
    p.add_argument("--seed", type=int, default=0)
    add_camera(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one variant")
    p.add_argument("--config", default=None)
    p.add_argument("--variant", choices=VARIANTS, default="sep_t_reg")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    add_camera(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint against clip files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    add_camera(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the three-variant comparison")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    add_camera(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("check-grad", help="finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_grad)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
