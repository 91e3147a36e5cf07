"""Learnable parameter storage.

A ParamBlock is one named array with a same-shape gradient accumulator. A
ParamStack packs J same-shaped blocks into one contiguous (J, ...) array so
per-joint models can run batched math while every joint keeps its own named,
storage-disjoint block (the blocks are views into disjoint slices).
"""

from __future__ import annotations

import numpy as np


class ParamBlock:
    """Named values + gradient accumulator of identical shape."""

    __slots__ = ("name", "values", "grad")

    def __init__(self, name: str, values: np.ndarray, grad: np.ndarray | None = None):
        self.name = name
        self.values = values
        self.grad = np.zeros_like(values) if grad is None else grad

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"ParamBlock({self.name!r}, shape={self.values.shape})"


class ParamStack:
    """J same-shaped ParamBlocks backed by one (J, ...) array.

    ``values``/``grad`` are the stacked arrays (what the batched forward and
    the optimizer touch); ``blocks[j]`` are per-joint views for naming,
    checkpointing, and inspection.
    """

    __slots__ = ("name", "values", "grad", "blocks")

    def __init__(self, name: str, values: np.ndarray, block_names: list[str]):
        if values.shape[0] != len(block_names):
            raise ValueError("one block name per leading slice required")
        self.name = name
        self.values = values
        self.grad = np.zeros_like(values)
        self.blocks = [
            ParamBlock(block_names[j], self.values[j], self.grad[j])
            for j in range(values.shape[0])
        ]

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"ParamStack({self.name!r}, shape={self.values.shape})"


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def all_blocks(slots) -> list[ParamBlock]:
    """Flatten a list of ParamBlock/ParamStack into individual named blocks."""
    out = []
    for s in slots:
        if isinstance(s, ParamStack):
            out.extend(s.blocks)
        else:
            out.append(s)
    return out


def zero_grads(slots) -> None:
    for s in slots:
        s.zero_grad()
