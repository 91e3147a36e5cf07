"""Differentiable layers: dense linear maps, per-joint linear maps, GRU cells.

A GruCell is shape-generic: constructed with ``joints=None`` it is a single
cell with 2-D weights acting on (..., input) vectors; with ``joints=J`` its
weights are (J, hidden, input) stacks acting on (..., J, input) features with
no mixing across joints.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from . import tape
from .params import ParamBlock, ParamStack, uniform_init
from .tape import _sigmoid_values as _sigmoid


def _weight(rng, name, shape, fan_in, joints=None):
    if joints is None:
        return ParamBlock(name, uniform_init(rng, shape, fan_in))
    stacked = uniform_init(rng, (joints,) + shape, fan_in)
    return ParamStack(name, stacked, [f"joint{j:02d}.{name}" for j in range(joints)])


def _bias(name, size, joints=None):
    if joints is None:
        return ParamBlock(name, np.zeros(size))
    return ParamStack(name, np.zeros((joints, size)),
                      [f"joint{j:02d}.{name}" for j in range(joints)])


def _transpose2d(t: tape.Tensor) -> tape.Tensor:
    def vjp(g):
        return (g.T,)
    return tape.Tensor(t.value.T, (t,), vjp)


def _affine(w, x: tape.Tensor, b=None) -> tape.Tensor:
    """x (..., in) @ W^T (+ b) for a 2-D weight block."""
    wt = _transpose2d(tape.param(w))
    squeeze = x.value.ndim == 1
    x2 = x.reshape(1, -1) if squeeze else x
    lead = None
    if x2.value.ndim > 2:
        lead = x2.value.shape[:-1]
        x2 = x2.reshape((-1, x2.value.shape[-1]))
    out = tape.matmul(x2, wt)
    if b is not None:
        out = out + tape.param(b)
    if lead is not None:
        out = out.reshape(lead + (w.values.shape[0],))
    return out.reshape(out.value.shape[1:]) if squeeze else out


def linear_forward(w, b, x) -> tape.Tensor:
    """Recorded affine map W x + b; accepts (..., in) inputs."""
    x = tape.as_tensor(x)
    if w.values.shape[-1] != x.value.shape[-1] or b.values.shape[-1] != w.values.shape[0]:
        raise ShapeMismatch(
            f"linear: W {w.values.shape}, b {b.values.shape}, x {x.value.shape}")
    return _affine(w, x, b)


class Linear:
    """Dense layer y = W x + b with W of shape (out, in)."""

    def __init__(self, name: str, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.name = name
        self.w = ParamBlock(f"{name}.W", uniform_init(rng, (out_dim, in_dim), in_dim))
        self.b = ParamBlock(f"{name}.b", np.zeros(out_dim))

    def __call__(self, x) -> tape.Tensor:
        return linear_forward(self.w, self.b, tape.as_tensor(x))

    def slots(self):
        return [self.w, self.b]


class JointLinear:
    """J independent dense layers applied along a joint axis."""

    def __init__(self, name: str, joints: int, in_dim: int, out_dim: int,
                 rng: np.random.Generator):
        self.name = name
        self.joints = joints
        self.w = _weight(rng, f"{name}.W", (out_dim, in_dim), in_dim, joints)
        self.b = _bias(f"{name}.b", out_dim, joints)

    def __call__(self, x) -> tape.Tensor:
        x = tape.as_tensor(x)
        return tape.jointwise_matvec(tape.param(self.w), x) + tape.param(self.b)

    def slots(self):
        return [self.w, self.b]


class GruCell:
    """Standard GRU cell.

    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    n = tanh(W_n x + r * (U_n h) + b_n)
    h' = (1 - z) * n + z * h
    """

    def __init__(self, name: str, input_dim: int, hidden_dim: int,
                 rng: np.random.Generator, joints: int | None = None):
        self.name = name
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.joints = joints
        self.w_z = _weight(rng, f"{name}.W_z", (hidden_dim, input_dim), input_dim, joints)
        self.w_r = _weight(rng, f"{name}.W_r", (hidden_dim, input_dim), input_dim, joints)
        self.w_n = _weight(rng, f"{name}.W_n", (hidden_dim, input_dim), input_dim, joints)
        self.u_z = _weight(rng, f"{name}.U_z", (hidden_dim, hidden_dim), hidden_dim, joints)
        self.u_r = _weight(rng, f"{name}.U_r", (hidden_dim, hidden_dim), hidden_dim, joints)
        self.u_n = _weight(rng, f"{name}.U_n", (hidden_dim, hidden_dim), hidden_dim, joints)
        self.b_z = _bias(f"{name}.b_z", hidden_dim, joints)
        self.b_r = _bias(f"{name}.b_r", hidden_dim, joints)
        self.b_n = _bias(f"{name}.b_n", hidden_dim, joints)

    def _lin(self, w, x):
        if self.joints is None:
            return _affine(w, x)
        return tape.jointwise_matvec(tape.param(w), x)

    def step(self, x, h_prev) -> tape.Tensor:
        """One recurrence step; x (..., in), h_prev (..., hidden)."""
        x = tape.as_tensor(x)
        h_prev = tape.as_tensor(h_prev)
        if x.value.shape[-1] != self.input_dim or h_prev.value.shape[-1] != self.hidden_dim:
            raise ShapeMismatch(
                f"gru step: x {x.value.shape}, h {h_prev.value.shape}, "
                f"expected input {self.input_dim}, hidden {self.hidden_dim}")
        z = tape.sigmoid(self._lin(self.w_z, x) + self._lin(self.u_z, h_prev)
                         + tape.param(self.b_z))
        r = tape.sigmoid(self._lin(self.w_r, x) + self._lin(self.u_r, h_prev)
                         + tape.param(self.b_r))
        n = tape.tanh(self._lin(self.w_n, x) + r * self._lin(self.u_n, h_prev)
                      + tape.param(self.b_n))
        return (1.0 - z) * n + z * h_prev

    def slots(self):
        return [self.w_z, self.w_r, self.w_n, self.u_z, self.u_r, self.u_n,
                self.b_z, self.b_r, self.b_n]


def gru_step(cell: GruCell, x, h_prev) -> tape.Tensor:
    """Functional alias for ``cell.step``."""
    return cell.step(x, h_prev)


def _jw(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(..., J, D) times (J, H, D)^T -> (..., J, H), stacked GEMMs."""
    nj, nh, _ = w.shape
    lead = v.shape[:-2]
    vj = v.reshape(-1, nj, v.shape[-1]).transpose(1, 0, 2)
    out = (vj @ w.transpose(0, 2, 1)).transpose(1, 0, 2)
    return out.reshape(lead + (nj, nh))


def _jw_t(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(..., J, H) times (J, H, D) -> (..., J, D): adjoint of _jw."""
    nj, _, nd = w.shape
    lead = v.shape[:-2]
    vj = v.reshape(-1, nj, v.shape[-1]).transpose(1, 0, 2)
    out = (vj @ w).transpose(1, 0, 2)
    return out.reshape(lead + (nj, nd))


def _outer_sum(a: np.ndarray, b: np.ndarray, nj: int) -> np.ndarray:
    """sum_n a[n, j, :] outer b[n, j, :] -> (J, H, D)."""
    aj = a.reshape(-1, nj, a.shape[-1]).transpose(1, 2, 0)
    bj = b.reshape(-1, nj, b.shape[-1]).transpose(1, 0, 2)
    return aj @ bj


def gru_layer(cell: GruCell, x_seq) -> tape.Tensor:
    """Run a joint-stacked GruCell over a whole window as one recorded op.

    x_seq: (B, T, J, input) -> hidden states (B, T, J, hidden), initial state
    zero. Numerically identical to looping ``cell.step`` but recorded as a
    single node: the whole backward-through-time pass is hand-written, with
    input-side products and weight gradients batched over B*T.
    """
    if cell.joints is None:
        raise ShapeMismatch("gru_layer needs a joint-stacked cell")
    x = tape.as_tensor(x_seq)
    if x.value.ndim != 4 or x.value.shape[-1] != cell.input_dim \
            or x.value.shape[-2] != cell.joints:
        raise ShapeMismatch(f"gru_layer input shaped {x.value.shape}")
    parents = (x, tape.param(cell.w_z), tape.param(cell.w_r), tape.param(cell.w_n),
               tape.param(cell.u_z), tape.param(cell.u_r), tape.param(cell.u_n),
               tape.param(cell.b_z), tape.param(cell.b_r), tape.param(cell.b_n))
    xv = x.value
    nb, nt, nj, _ = xv.shape
    nh = cell.hidden_dim
    # the three gate maps run as one concatenated GEMM per side
    w_cat = np.concatenate([cell.w_z.values, cell.w_r.values, cell.w_n.values],
                           axis=1)                       # (J, 3H, in)
    u_cat = np.concatenate([cell.u_z.values, cell.u_r.values, cell.u_n.values],
                           axis=1)                       # (J, 3H, H)
    b_cat = np.concatenate([cell.b_z.values, cell.b_r.values, cell.b_n.values],
                           axis=1)                       # (J, 3H)

    x_proj = _jw(xv, w_cat) + b_cat                      # (B, T, J, 3H)
    hs_prev = np.empty((nb, nt, nj, nh))
    zs = np.empty_like(hs_prev)
    rs = np.empty_like(hs_prev)
    ns = np.empty_like(hs_prev)
    unhs = np.empty_like(hs_prev)
    out = np.empty_like(hs_prev)
    h = np.zeros((nb, nj, nh))
    for t in range(nt):
        hs_prev[:, t] = h
        rec = _jw(h, u_cat)
        pre = x_proj[:, t] + rec
        z = _sigmoid(pre[..., :nh])
        r = _sigmoid(pre[..., nh:2 * nh])
        unh = rec[..., 2 * nh:]
        n = np.tanh(x_proj[:, t, :, 2 * nh:] + r * unh)
        h = (1.0 - z) * n + z * h
        zs[:, t], rs[:, t], ns[:, t], unhs[:, t], out[:, t] = z, r, n, unh, h

    def vjp(g):
        d_cat = np.empty((nb, nt, nj, 3 * nh))           # (daz, dar, dan)
        dh = np.zeros((nb, nj, nh))
        for t in range(nt - 1, -1, -1):
            gt = g[:, t] + dh
            z, r, n = zs[:, t], rs[:, t], ns[:, t]
            dn = gt * (1.0 - z)
            dh = gt * z
            dan_t = dn * (1.0 - n * n)
            d_cat[:, t, :, 2 * nh:] = dan_t
            d_cat[:, t, :, nh:2 * nh] = (dan_t * unhs[:, t]) * r * (1.0 - r)
            d_cat[:, t, :, :nh] = (gt * (hs_prev[:, t] - n)) * z * (1.0 - z)
            # recurrent-side adjoint pairs (daz, dar, dan*r) with (Uz, Ur, Un)
            rec_adj = d_cat[:, t].copy()
            rec_adj[..., 2 * nh:] = dan_t * r
            dh += _jw_t(rec_adj, u_cat)
        d_rec = d_cat.copy()
        d_rec[..., 2 * nh:] = d_cat[..., 2 * nh:] * rs   # dunh = dan * r
        gx = _jw_t(d_cat, w_cat) if x._needs else None
        gw = _outer_sum(d_cat, xv, nj)                   # (J, 3H, in)
        gu = _outer_sum(d_rec, hs_prev, nj)              # (J, 3H, H)
        gb = d_cat.sum(axis=(0, 1))                      # (J, 3H)
        return (gx,
                gw[:, :nh], gw[:, nh:2 * nh], gw[:, 2 * nh:],
                gu[:, :nh], gu[:, nh:2 * nh], gu[:, 2 * nh:],
                gb[:, :nh], gb[:, nh:2 * nh], gb[:, 2 * nh:])

    return tape.Tensor(out, parents, vjp)


def mse(a, b) -> tape.Tensor:
    """Mean of squared entrywise differences."""
    a, b = tape.as_tensor(a), tape.as_tensor(b)
    if a.value.shape != b.value.shape:
        raise ShapeMismatch(f"mse: {a.value.shape} vs {b.value.shape}")
    d = a - b
    return (d * d).mean()
