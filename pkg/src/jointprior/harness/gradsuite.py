"""Finite-difference verification of the full training objective.

Rebuilds the complete generator loss (Gram-Schmidt, forward kinematics,
projection, all five terms) and the discriminator loss on a small synthetic
clip, then checks analytic gradients against central differences for one
sampled parameter block per architectural component.
"""

from __future__ import annotations

import numpy as np

from .. import camera, models, rot3, skeleton, synthmotion
from ..gradcore import tape
from ..gradcore.checkgrad import check_slot, max_relative_error
from .losses import LossWeights, discriminator_loss, generator_loss
from .train import motion_to_sixd

# one representative slot per component of the architecture
_GENERATOR_COMPONENTS = (
    ("encoder", "enc_f", "w"),
    ("gru", "gru0", "u_n"),
    ("gru", "gru1", "w_z"),
    ("lift", "lift", "w"),
    ("head", "head", "w"),
    ("shape branch", "w_beta", "w"),
    ("camera branch", "w_cam", "w"),
)


def run_gradient_suite(seed: int = 0, frames: int = 8, h: float = 1e-5,
                       entries_per_slot: int = 4, verbose: bool = False) -> list:
    """Check every component's gradients; returns one result row per slot."""
    intr = camera.CameraIntrinsics()
    clip = synthmotion.synthesize_clip(
        synthmotion.family_config("walk-like", seed=seed + 11),
        intr, noise_px=3.0, seed=seed + 13, frames=frames)
    real = motion_to_sixd(synthmotion.sample_motion(
        synthmotion.family_config("wave-like", seed=seed + 17), frames))

    gen = models.Generator(models.GeneratorConfig(seed=seed))
    disc = models.MotionDiscriminator(models.DiscriminatorConfig(seed=seed + 1))
    weights = LossWeights()
    tree = skeleton.default_tree()
    gen_slots = gen.slots()
    disc_slots = disc.slots()
    rng = np.random.default_rng(seed + 23)

    def gen_loss():
        fv = gen.encode_observations(clip.observations[None])
        out = gen.forward(fv)
        total, _ = generator_loss(out, [clip], disc, weights, tree=tree)
        return total

    def disc_loss():
        fv = gen.encode_observations(clip.observations[None])
        out = gen.forward(fv)
        fake = rot3.matrix_to_sixd(out.rotmats.value)
        return discriminator_loss(disc, real[None], fake)

    rows = []

    def record(component: str, slot, loss_fn, slots):
        results = check_slot(loss_fn, slot, slots, n_entries=entries_per_slot,
                             h=h, rng=rng)
        worst = max_relative_error(results)
        rows.append({"component": component, "slot": slot.name,
                     "max_rel_err": worst})
        if verbose:
            print(f"{component:16s} {slot.name:12s} max rel err {worst:.3e}")

    for component, layer_name, attr in _GENERATOR_COMPONENTS:
        layer = getattr(gen, layer_name)
        record(component, getattr(layer, attr), gen_loss, gen_slots)
    for layer in (disc.fc1, disc.fc2, disc.attn, disc.out):
        record("discriminator", layer.w, disc_loss, disc_slots)
    return rows
