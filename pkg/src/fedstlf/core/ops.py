"""Differentiable layer primitives.

Each primitive computes its forward value with numpy and registers a
closed-form backward on the active tape. Layouts follow the
batch-major, time-then-channel convention: ``[batch, T, channels]``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .. import kernels
from .tensor import DimensionError, Tensor, track

LN_EPS = 1e-5
BN_EPS = 1e-3
BN_MOMENTUM = 0.99


class ConfigurationError(ValueError):
    pass


class EmptySequenceError(ValueError):
    pass


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} differ")
    out = Tensor(a.data + b.data)
    return track((a, b), out, lambda g: (g, g))


def dense(x: Tensor, w: Tensor, b: Tensor, activation: str = "none") -> Tensor:
    """y = act(x @ w + b), applied along the last axis of ``x``."""
    if x.shape[-1] != w.shape[0] or w.ndim != 2 or b.shape != (w.shape[1],):
        raise DimensionError(
            f"dense: input {x.shape} incompatible with weight {w.shape} / bias {b.shape}")
    if activation not in ("none", "relu", "tanh"):
        raise ConfigurationError(f"unknown activation {activation!r}")
    z = x.data @ w.data + b.data
    if activation == "relu":
        y = np.maximum(z, 0.0)
    elif activation == "tanh":
        y = np.tanh(z)
    else:
        y = z
    out = Tensor(y)

    def backward(g):
        if activation == "relu":
            g = g * (z > 0)
        elif activation == "tanh":
            g = g * (1.0 - y * y)
        x2 = x.data.reshape(-1, x.shape[-1])
        g2 = g.reshape(-1, g.shape[-1])
        return g @ w.data.T, x2.T @ g2, g2.sum(axis=0)

    return track((x, w, b), out, backward)


def lstm(x: Tensor, w: Tensor, u: Tensor, b: Tensor, return_sequences: bool = True) -> Tensor:
    """LSTM layer with zero initial state.

    Gate blocks in ``w``/``u``/``b`` are ordered input, forget, candidate,
    output. ``w`` is ``[in, 4c]``, ``u`` is ``[c, 4c]``.
    """
    if x.ndim != 3:
        raise DimensionError(f"lstm expects [batch, T, in], got {x.shape}")
    cells = u.shape[0]
    if cells <= 0:
        raise ConfigurationError("lstm needs at least one cell")
    batch, steps, n_in = x.shape
    if steps < 1:
        raise EmptySequenceError("lstm needs T >= 1")
    if w.shape != (n_in, 4 * cells) or u.shape != (cells, 4 * cells) or b.shape != (4 * cells,):
        raise DimensionError(
            f"lstm: input {x.shape}, w {w.shape}, u {u.shape}, b {b.shape} disagree")

    c = cells
    xw = np.ascontiguousarray(x.data @ w.data + b.data)
    ud = np.ascontiguousarray(u.data)
    gates, cs, tcs, hs = kernels.lstm_forward(xw, ud)
    out = Tensor(hs if return_sequences else hs[:, -1].copy())

    def backward(g):
        if return_sequences:
            dh_seq = np.ascontiguousarray(g)
        else:
            dh_seq = np.zeros((batch, steps, c))
            dh_seq[:, -1] = g
        dz = kernels.lstm_backward(dh_seq, gates, cs, tcs, ud)
        dz2 = dz.reshape(-1, 4 * c)
        h_before = np.concatenate([np.zeros((batch, 1, c)), hs[:, :-1]], axis=1)
        du = h_before.reshape(-1, c).T @ dz2
        dw = x.data.reshape(-1, n_in).T @ dz2
        return dz @ w.data.T, dw, du, dz2.sum(axis=0)

    return track((x, w, u, b), out, backward)


class AttentionWeights(NamedTuple):
    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor


def multi_head_attention(query: Tensor, key: Tensor, value: Tensor, p: AttentionWeights,
                         heads: int, head_size: int, return_scores: bool = False):
    """Scaled dot-product attention over ``heads`` learned projections.

    Output width is ``heads * head_size``. With ``return_scores`` the
    per-head softmax weights ``[batch, heads, Tq, Tk]`` are returned too.
    """
    if heads < 1 or head_size < 1:
        raise ConfigurationError("heads and head_size must be >= 1")
    if key.shape[1] == 0:
        raise EmptySequenceError("attention over an empty key sequence")
    if key.shape[:2] != value.shape[:2] or query.shape[0] != key.shape[0]:
        raise DimensionError(
            f"attention: query {query.shape}, key {key.shape}, value {value.shape} disagree")
    width = heads * head_size
    for name, wt, src in (("wq", p.wq, query), ("wk", p.wk, key), ("wv", p.wv, value)):
        if wt.shape != (src.shape[-1], width):
            raise DimensionError(f"attention: {name} {wt.shape} vs input {src.shape}")
    if p.wo.shape != (width, width):
        raise DimensionError(f"attention: wo {p.wo.shape} must be {(width, width)}")

    batch, tq = query.shape[:2]
    tk = key.shape[1]
    scale = 1.0 / np.sqrt(head_size)

    def split(a, steps):
        return a.reshape(batch, steps, heads, head_size).transpose(0, 2, 1, 3)

    q = split(query.data @ p.wq.data + p.bq.data, tq)
    k = split(key.data @ p.wk.data + p.bk.data, tk)
    v = split(value.data @ p.wv.data + p.bv.data, tk)
    s = (q @ k.transpose(0, 1, 3, 2)) * scale
    s -= s.max(axis=-1, keepdims=True)
    a = np.exp(s)
    a /= a.sum(axis=-1, keepdims=True)
    o = (a @ v).transpose(0, 2, 1, 3).reshape(batch, tq, width)
    out = Tensor(o @ p.wo.data + p.bo.data)

    def backward(g):
        g2 = g.reshape(-1, width)
        d_wo = o.reshape(-1, width).T @ g2
        d_bo = g2.sum(axis=0)
        do = split(g @ p.wo.data.T, tq)
        da = do @ v.transpose(0, 1, 3, 2)
        dv = a.transpose(0, 1, 3, 2) @ do
        ds = a * (da - (da * a).sum(axis=-1, keepdims=True)) * scale
        dq = ds @ k
        dk = ds.transpose(0, 1, 3, 2) @ q

        def merge(d, steps):
            return d.transpose(0, 2, 1, 3).reshape(batch, steps, width)

        dq, dk, dv = merge(dq, tq), merge(dk, tk), merge(dv, tk)
        grads = []
        for src, wt, d in ((query, p.wq, dq), (key, p.wk, dk), (value, p.wv, dv)):
            grads.append((d @ wt.data.T,
                          src.data.reshape(-1, src.shape[-1]).T @ d.reshape(-1, width),
                          d.reshape(-1, width).sum(axis=0)))
        (dxq, dwq, dbq), (dxk, dwk, dbk), (dxv, dwv, dbv) = grads
        return dxq, dxk, dxv, dwq, dbq, dwk, dbk, dwv, dbv, d_wo, d_bo

    out = track((query, key, value) + tuple(p), out, backward)
    if return_scores:
        return out, a
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LN_EPS) -> Tensor:
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm: input {x.shape}, gain {gain.shape}, bias {bias.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    out = Tensor(xhat * gain.data + bias.data)

    def backward(g):
        lead = tuple(range(g.ndim - 1))
        dxhat = g * gain.data
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return track((x, gain, bias), out, backward)


def batch_norm(x: Tensor, gain: Tensor, bias: Tensor, running_mean: np.ndarray,
               running_var: np.ndarray, training: bool, momentum: float = BN_MOMENTUM,
               eps: float = BN_EPS) -> Tensor:
    """Per-channel normalisation over batch and time.

    In training mode batch statistics are used and ``running_mean`` /
    ``running_var`` are updated in place.
    """
    ch = x.shape[-1]
    if gain.shape != (ch,) or bias.shape != (ch,):
        raise DimensionError(f"batch_norm: input {x.shape}, gain {gain.shape}, bias {bias.shape}")
    axes = tuple(range(x.ndim - 1))
    if not training:
        inv = 1.0 / np.sqrt(running_var + eps)
        xhat = (x.data - running_mean) * inv
        out = Tensor(xhat * gain.data + bias.data)

        def backward_infer(g):
            return g * gain.data * inv, (g * xhat).sum(axis=axes), g.sum(axis=axes)

        return track((x, gain, bias), out, backward_infer)

    count = x.data.size // ch
    if count < 2:
        raise ConfigurationError("batch_norm training needs batch*T >= 2")
    mu = x.data.mean(axis=axes)
    xc = x.data - mu
    var = (xc * xc).mean(axis=axes)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    running_mean *= momentum
    running_mean += (1.0 - momentum) * mu
    running_var *= momentum
    running_var += (1.0 - momentum) * var
    out = Tensor(xhat * gain.data + bias.data)

    def backward(g):
        dxhat = g * gain.data
        dx = inv * (dxhat - dxhat.mean(axis=axes) - xhat * (dxhat * xhat).mean(axis=axes))
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return track((x, gain, bias), out, backward)


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Same-padded cross-correlation along time. ``kernels`` is ``[width, in, out]``."""
    width, c_in, c_out = kernels.shape
    batch, steps, ch = x.shape
    if ch != c_in or bias.shape != (c_out,):
        raise DimensionError(f"conv1d: input {x.shape}, kernels {kernels.shape}, bias {bias.shape}")
    if width % 2 == 0:
        raise ConfigurationError(f"conv1d width must be odd, got {width}")
    if width > steps:
        raise ConfigurationError(f"conv1d width {width} exceeds sequence length {steps}")
    pad = (width - 1) // 2
    xp = np.pad(x.data, ((0, 0), (pad, pad), (0, 0)))
    cols = np.stack([xp[:, k:k + steps] for k in range(width)], axis=2)
    cols2 = cols.reshape(batch * steps, width * c_in)
    kflat = kernels.data.reshape(width * c_in, c_out)
    out = Tensor((cols2 @ kflat).reshape(batch, steps, c_out) + bias.data)

    def backward(g):
        g2 = g.reshape(-1, c_out)
        dcols = (g2 @ kflat.T).reshape(batch, steps, width, c_in)
        dxp = np.zeros_like(xp)
        for k in range(width):
            dxp[:, k:k + steps] += dcols[:, :, k]
        dk = (cols2.T @ g2).reshape(width, c_in, c_out)
        return dxp[:, pad:pad + steps], dk, g2.sum(axis=0)

    return track((x, kernels, bias), out, backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(x.data * mask)
    return track((x,), out, lambda g: (g * mask,))


def avg_pool1d(x: Tensor) -> Tensor:
    """Global mean over the time axis: ``[batch, T, ch] -> [batch, ch]``."""
    steps = x.shape[1]
    out = Tensor(x.data.mean(axis=1))
    return track((x,), out,
                 lambda g: (np.repeat(g[:, None, :] / steps, steps, axis=1),))


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity outside training or when ``rate == 0``."""
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    out = Tensor(x.data * keep)
    return track((x,), out, lambda g: (g * keep,))


def mse_loss(pred: Tensor, target) -> Tensor:
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if pred.shape != t.shape:
        raise DimensionError(f"mse_loss: prediction {pred.shape} vs target {t.shape}")
    diff = pred.data - t
    out = Tensor(np.mean(diff * diff))
    scale = 2.0 / diff.size
    return track((pred,), out, lambda g: (g * scale * diff,))
