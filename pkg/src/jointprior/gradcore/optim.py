"""Adam with decoupled weight decay.

Decay is applied directly to the parameters (p -= lr * wd * p) before the
bias-corrected Adam delta, i.e. it never enters the moment estimates.
Gradients are zeroed after each step. Updates run in place through
preallocated scratch buffers; the arithmetic matches the textbook update
operation for operation.
"""

from __future__ import annotations

import numpy as np


class AdamState:
    """Optimizer state over a fixed list of parameter containers."""

    def __init__(self, params, lr: float = 1e-4, weight_decay: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]
        self._s1 = [np.empty_like(p.values) for p in self.params]
        self._s2 = [np.empty_like(p.values) for p in self.params]


def adam_step(state: AdamState) -> None:
    """One update over every registered parameter container."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    decay = state.lr * state.weight_decay
    for p, m, v, s1, s2 in zip(state.params, state.m, state.v,
                               state._s1, state._s2):
        g = p.grad
        if state.weight_decay:
            np.multiply(p.values, decay, out=s1)
            p.values -= s1
        m *= b1
        np.multiply(g, 1.0 - b1, out=s1)
        m += s1
        v *= b2
        np.multiply(g, g, out=s1)
        s1 *= 1.0 - b2
        v += s1
        np.divide(m, c1, out=s1)
        np.divide(v, c2, out=s2)
        np.sqrt(s2, out=s2)
        s2 += state.eps
        s1 /= s2
        s1 *= state.lr
        p.values -= s1
        g[...] = 0.0
