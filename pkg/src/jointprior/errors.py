"""Exception types shared across the package."""


class ShapeMismatch(ValueError):
    """Operands have incompatible shapes."""


class DegenerateSixD(ValueError):
    """6D rotation input too close to a degenerate configuration to orthonormalize."""


class NonPositiveScale(ValueError):
    """Weak-camera scale must be strictly positive."""


class BehindCamera(ValueError):
    """A point's camera-space depth is at or behind the image plane."""


class DegenerateFrame(ValueError):
    """Point set is rank-deficient; similarity alignment is ill-posed."""


class TooShort(ValueError):
    """Trajectory has too few frames for the requested statistic."""


class GraphConsumed(RuntimeError):
    """backward() was invoked twice on a single-use recording."""


class NonFiniteLoss(RuntimeError):
    """Training produced a NaN or infinite loss term."""


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""
