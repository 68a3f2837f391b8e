"""Batched numpy building blocks with hand-written backward passes."""

from __future__ import annotations

import numpy as np

LEAKY_SLOPE = 0.01
BN_EPS = 1e-5


def sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def lstm_cell_forward(x_t, h_prev, c_prev, w, u, b):
    """One LSTM step for a batch (or a single vector).

    ``w`` is (4H, D), ``u`` is (4H, H), ``b`` is (4H,); gate blocks are ordered
    input, forget, cell candidate, output. Returns ``(h_t, c_t, gates)`` where
    ``gates`` holds the activated (i, f, g, o) for the backward pass.
    """
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape[-1] != w.shape[1] or h_prev.shape[-1] != u.shape[1]:
        raise ValueError(f"input {x_t.shape} / state {h_prev.shape} do not match weights {w.shape}, {u.shape}")
    z = x_t @ w.T + h_prev @ u.T + b
    return _lstm_gates_step(z, c_prev)


def _lstm_gates_step(z, c_prev):
    hid = c_prev.shape[-1]
    i = sigmoid(z[..., :hid])
    f = sigmoid(z[..., hid : 2 * hid])
    g = np.tanh(z[..., 2 * hid : 3 * hid])
    o = sigmoid(z[..., 3 * hid :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, (i, f, g, o)


def lstm_layer_forward(x, w, u, b):
    """Run a layer over a (B, K, D) sequence; returns hidden states (B, K, H) and a cache."""
    n_b, n_k, _ = x.shape
    hid = u.shape[1]
    xw = x @ w.T + b  # input projection for every step at once
    h = np.zeros((n_b, hid))
    c = np.zeros((n_b, hid))
    hs = np.empty((n_b, n_k, hid))
    steps = []
    for t in range(n_k):
        h_prev, c_prev = h, c
        h, c, gates = _lstm_gates_step(xw[:, t] + h_prev @ u.T, c_prev)
        hs[:, t] = h
        steps.append((h_prev, c_prev, c, gates))
    return hs, (x, w, u, steps)


def lstm_layer_backward(dhs, cache):
    """BPTT through one layer. ``dhs`` is dL/dh_t for every step (B, K, H)."""
    x, w, u, steps = cache
    n_b, n_k, _ = x.shape
    hid = u.shape[1]
    du = np.zeros_like(u)
    dz_all = np.empty((n_b, n_k, 4 * hid))
    dh_next = np.zeros((n_b, hid))
    dc_next = np.zeros((n_b, hid))
    for t in reversed(range(n_k)):
        h_prev, c_prev, c, (i, f, g, o) = steps[t]
        dh = dhs[:, t] + dh_next
        tc = np.tanh(c)
        dc = dh * o * (1.0 - tc**2) + dc_next
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g**2),
                dh * tc * o * (1.0 - o),
            ],
            axis=1,
        )
        dz_all[:, t] = dz
        du += dz.T @ h_prev
        dh_next = dz @ u
        dc_next = dc * f
    dw = np.einsum("bkg,bkd->gd", dz_all, x)
    db = dz_all.sum(axis=(0, 1))
    dx = dz_all @ w
    return dx, dw, du, db


def batchnorm_forward(x, gamma, beta, mean=None, var=None):
    """Normalize with batch statistics (``mean``/``var`` None) or with the given running ones."""
    if mean is None:
        mean = x.mean(axis=0)
        var = x.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean) * inv_std
    return gamma * xhat + beta, (xhat, inv_std, gamma, mean, var)


def batchnorm_backward(dy, cache):
    xhat, inv_std, gamma, _, _ = cache
    n_b = dy.shape[0]
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * gamma
    dx = (inv_std / n_b) * (n_b * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dx, dgamma, dbeta


def leaky_relu(x):
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def leaky_relu_backward(dy, x):
    return np.where(x > 0, dy, LEAKY_SLOPE * dy)
