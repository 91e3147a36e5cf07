"""Self-contained differentiable core: tape autodiff, layers, Adam, checkpoints."""

from . import tape
from .checkpoint import load_checkpoint, restore_blocks, save_checkpoint
from .nn import GruCell, JointLinear, Linear, gru_step, linear_forward, mse
from .optim import AdamState, adam_step
from .params import ParamBlock, ParamStack, all_blocks, uniform_init, zero_grads
from .tape import Tensor, backward

__all__ = [
    "tape", "Tensor", "backward",
    "ParamBlock", "ParamStack", "all_blocks", "uniform_init", "zero_grads",
    "Linear", "JointLinear", "GruCell", "gru_step", "linear_forward", "mse",
    "AdamState", "adam_step",
    "save_checkpoint", "load_checkpoint", "restore_blocks",
]
