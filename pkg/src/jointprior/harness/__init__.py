"""Training harness: losses, loop, evaluation, ablations, file formats, CLI."""

from .losses import LossWeights, discriminator_loss, generator_loss
from .train import (TrainConfig, TrainResult, VARIANTS, evaluate, run_ablation,
                    train, variant_config)

__all__ = [
    "LossWeights", "generator_loss", "discriminator_loss",
    "TrainConfig", "TrainResult", "VARIANTS", "train", "evaluate",
    "run_ablation", "variant_config",
]
