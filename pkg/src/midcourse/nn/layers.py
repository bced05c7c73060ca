"""Layer primitives with hand-written backward passes.

Batched arrays throughout: sequences are ``(batch, length)`` for the
convolution and ``(batch, steps, features)`` for the LSTM. The public forward
functions also accept a single unbatched example.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DomainError, NumericError, ShapeError

PROB_FLOOR = 1e-12


def check_finite(name: str, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite values in layer {name!r}")


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


# --------------------------------------------------------------------------
# 1-D convolution (single input channel, valid padding, stride 1)


def conv1d_pre(x, kernels, bias):
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 2:
        raise ShapeError("kernels must be filters x kernel_size")
    k = kernels.shape[1]
    if x.shape[-1] < k:
        raise ShapeError(f"sequence length {x.shape[-1]} shorter than kernel size {k}")
    windows = sliding_window_view(x, k, axis=-1)  # (B, L_out, K)
    z = np.einsum("blk,fk->bfl", windows, kernels) + np.asarray(bias, float)[None, :, None]
    return z, windows


def conv1d_forward(x, kernels, bias):
    """Valid cross-correlation followed by ReLU -> ``(filters, L - K + 1)`` per example."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    z, _ = conv1d_pre(x[None] if single else x, kernels, bias)
    out = relu(z)
    return out[0] if single else out


def conv1d_backward(dz, windows):
    """Kernel and bias gradients from the pre-activation gradient ``dz``."""
    d_kernels = np.einsum("bfl,blk->fk", dz, windows)
    d_bias = dz.sum(axis=(0, 2))
    return d_kernels, d_bias


# --------------------------------------------------------------------------
# max pooling


def maxpool1d(a, pool_size: int):
    """Non-overlapping max pooling over the last axis; trailing remainder dropped.

    Returns ``(pooled, argmax)`` where ``argmax`` holds positions in the input.
    """
    if pool_size < 1:
        raise DomainError(f"pool_size must be >= 1, got {pool_size}")
    a = np.asarray(a, dtype=np.float64)
    length = a.shape[-1]
    if length < pool_size:
        raise ShapeError(f"length {length} shorter than pool size {pool_size}")
    n_out = length // pool_size
    win = a[..., : n_out * pool_size].reshape(a.shape[:-1] + (n_out, pool_size))
    arg = win.argmax(axis=-1)
    pooled = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    idx = arg + np.arange(n_out) * pool_size
    return pooled, idx


def maxpool1d_backward(d_pooled, idx, length: int):
    da = np.zeros(d_pooled.shape[:-1] + (length,))
    np.put_along_axis(da, idx, d_pooled, axis=-1)
    return da


# --------------------------------------------------------------------------
# dense


def dense_forward(x, weights, bias, activation="none"):
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if weights.ndim != 2 or x.shape[-1] != weights.shape[1] or bias.shape != (weights.shape[0],):
        raise ShapeError(f"dense shapes disagree: x {x.shape}, W {weights.shape}, b {bias.shape}")
    z = x @ weights.T + bias
    if activation == "relu":
        return relu(z)
    if activation == "softmax":
        return softmax(z)
    if activation == "none":
        return z
    raise DomainError(f"unknown activation {activation!r}")


# --------------------------------------------------------------------------
# LSTM, gate order [input, forget, output, candidate]


def lstm_init_state(batch: int, hidden: int):
    return np.zeros((batch, hidden)), np.zeros((batch, hidden))


def lstm_sequence(seq, wx, wh, b):
    """Run the recurrence over ``seq`` of shape ``(B, T, d)``; returns ``(h_T, cache)``."""
    bsz, steps, d = seq.shape
    hidden = wh.shape[1]
    if wx.shape != (4 * hidden, d) or wh.shape != (4 * hidden, hidden) or b.shape != (4 * hidden,):
        raise ShapeError(
            f"LSTM parameter shapes {wx.shape}, {wh.shape}, {b.shape} do not fit "
            f"input dim {d} and {hidden} hidden units")
    if steps < 1:
        raise ShapeError("LSTM needs at least one timestep")
    h, c = lstm_init_state(bsz, hidden)
    cache = []
    for t in range(steps):
        x_t = seq[:, t, :]
        a = x_t @ wx.T + h @ wh.T + b
        i = sigmoid(a[:, :hidden])
        f = sigmoid(a[:, hidden:2 * hidden])
        o = sigmoid(a[:, 2 * hidden:3 * hidden])
        g = np.tanh(a[:, 3 * hidden:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        cache.append((x_t, h, c, i, f, o, g, tc))
        h, c = o * tc, c_new
    return h, cache


def lstm_forward(sequence, params, hidden_units: int):
    """Final hidden state ``h_T`` for one ``(T, d)`` sequence or a ``(B, T, d)`` batch.

    ``params`` holds ``Wx`` (4H x d), ``Wh`` (4H x H) and ``b`` (4H).
    """
    seq = np.asarray(sequence, dtype=np.float64)
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    if seq.ndim != 3:
        raise ShapeError("sequence must be (T, d) or (B, T, d)")
    if seq.shape[1] < 1:
        raise ShapeError("LSTM needs at least one timestep")
    wx, wh, b = (np.asarray(params[k], dtype=np.float64) for k in ("Wx", "Wh", "b"))
    if wh.shape[1] != hidden_units:
        raise ShapeError(f"Wh has {wh.shape[1]} columns, expected {hidden_units}")
    h, _ = lstm_sequence(seq, wx, wh, b)
    return h[0] if single else h


def lstm_backward(dh, cache, wx, wh):
    """Backpropagation through time from the gradient on ``h_T``."""
    hidden = wh.shape[1]
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * hidden)
    dc = np.zeros_like(dh)
    for x_t, h_prev, c_prev, i, f, o, g, tc in reversed(cache):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        da = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g * g)],
            axis=1)
        dwx += da.T @ x_t
        dwh += da.T @ h_prev
        db += da.sum(axis=0)
        dh = da @ wh
        dc = dc * f
    return dwx, dwh, db


# --------------------------------------------------------------------------
# loss


def cross_entropy(predicted, target_class: int) -> float:
    p = np.asarray(predicted, dtype=np.float64)
    if abs(p.sum() - 1.0) > 1e-6:
        raise DomainError(f"predicted probabilities sum to {p.sum()}, not 1")
    if not 0 <= int(target_class) < p.shape[0] or int(target_class) != target_class:
        raise DomainError(f"invalid class index {target_class}")
    return float(-np.log(max(p[int(target_class)], PROB_FLOOR)))


def batch_cross_entropy(probs, targets):
    """Mean clamped cross-entropy and its gradient w.r.t. the softmax logits."""
    n = probs.shape[0]
    picked = probs[np.arange(n), targets]
    loss = float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))
    dlogits = probs.copy()
    dlogits[np.arange(n), targets] -= 1.0
    dlogits[picked < PROB_FLOOR] = 0.0  # clamp region is flat
    return loss, dlogits / n
