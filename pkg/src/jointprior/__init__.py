"""jointprior: per-joint motion priors for video pose estimation.

Rotation math, a 24-joint kinematic skeleton, weak-perspective camera,
trajectory metrics, a small reverse-mode autodiff core, the per-joint
recurrent generator and motion discriminator, synthetic motion data, and the
adversarial training harness.
"""

__version__ = "0.1.0"
