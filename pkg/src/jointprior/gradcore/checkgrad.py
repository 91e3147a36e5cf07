"""Finite-difference gradient verification.

``check_slot`` compares analytic gradients of a scalar-loss builder against
central differences at the entries with the largest analytic gradient, which
keeps the relative-error comparison away from numerically dead entries.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .params import zero_grads


def analytic_gradient(loss_fn, slots):
    """Run loss_fn once, backprop, and return (loss value, grads by slot id)."""
    zero_grads(slots)
    loss = loss_fn()
    tape.backward(loss)
    grads = [s.grad.copy() for s in slots]
    zero_grads(slots)
    return loss.item(), grads


def fd_gradient(loss_fn, slot, index, h: float = 1e-5) -> float:
    """Central difference of loss_fn w.r.t. one entry of slot.values."""
    orig = slot.values[index]
    slot.values[index] = orig + h
    up = loss_fn().item()
    slot.values[index] = orig - h
    down = loss_fn().item()
    slot.values[index] = orig
    return (up - down) / (2.0 * h)


def check_slot(loss_fn, slot, slots, n_entries: int = 4, h: float = 1e-5,
               rng: np.random.Generator | None = None):
    """Compare analytic vs FD gradients on the largest-gradient entries.

    Entries are taken from the top of the |gradient| ranking: central
    differences at a fixed h cannot resolve entries whose gradient sits at the
    roundoff floor eps*|loss|/h, so comparing there would measure noise. If an
    rng is given, the checked entries are sampled from the top decile instead
    of taken deterministically.

    Returns a list of (index, analytic, fd, relative_error) rows, where the
    relative error is |a - f| / max(|a|, |f|, 1e-8).
    """
    zero_grads(slots)
    loss = loss_fn()
    tape.backward(loss)
    grad = slot.grad.copy()
    zero_grads(slots)

    flat = np.abs(grad).ravel()
    order = np.argsort(flat)[::-1]
    if rng is not None and flat.size > n_entries:
        pool = order[:max(n_entries, flat.size // 10)]
        chosen = rng.choice(pool, size=n_entries, replace=False)
    else:
        chosen = order[:n_entries]

    rows = []
    for k in chosen:
        index = np.unravel_index(int(k), slot.values.shape)
        a = float(grad[index])
        f = fd_gradient(loss_fn, slot, index, h=h)
        rel = abs(a - f) / max(abs(a), abs(f), 1e-8)
        rows.append((index, a, f, rel))
    return rows


def max_relative_error(rows) -> float:
    return max(r[3] for r in rows)
