"""Two-layer LSTM codeword classifier: parameters, forward/backward passes and loss."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from . import layers

SIGMOID = "sigmoid"  # multi-label head
SOFTMAX = "softmax"  # single-label ablation head

LOSS_BCE = "bce"
LOSS_LITERAL = "literal"  # positives-only cross entropy, kept for ablation
LOSS_CE = "ce"  # categorical cross entropy for the softmax head

PROB_CLAMP = 1e-12

TENSOR_ORDER = (
    "lstm1.w", "lstm1.u", "lstm1.b",
    "lstm2.w", "lstm2.u", "lstm2.b",
    "dense1.w", "dense1.b", "bn1.gamma", "bn1.beta",
    "dense2.w", "dense2.b", "bn2.gamma", "bn2.beta",
    "out.w", "out.b",
)  # fmt: skip
RUNNING_ORDER = ("bn1.mean", "bn1.var", "bn2.mean", "bn2.var")


@dataclass
class ModelParams:
    """Learnable tensors plus batch-norm running statistics and input scaling.

    Dense weights are stored (out, in); LSTM weights (4H, in) with gate blocks
    in the order input, forget, cell, output.
    """

    d_in: int
    hidden: int
    dense: tuple[int, int]
    n_out: int
    head: str = SIGMOID
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    running: dict[str, np.ndarray] = field(default_factory=dict)
    bn_momentum: float = 0.9
    bn_ready: bool = False
    input_mean: np.ndarray | None = None
    input_std: np.ndarray | None = None

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def n_parameters(self) -> int:
        return sum(t.size for t in self.tensors.values())


def init_params(
    d_in: int,
    n_out: int,
    hidden: int = 140,
    dense: tuple[int, int] = (200, 100),
    rng: np.random.Generator | None = None,
    head: str = SIGMOID,
    forget_bias: float = 1.0,
) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, forget-gate bias +1."""
    if rng is None:
        rng = np.random.default_rng(0)
    if head not in (SIGMOID, SOFTMAX):
        raise ValueError(f"unknown head {head!r}")

    def uni(shape, fan_in):
        lim = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-lim, lim, size=shape)

    h = hidden
    d1, d2 = dense
    t: dict[str, np.ndarray] = {}
    for name, fan in (("lstm1", d_in), ("lstm2", h)):
        t[f"{name}.w"] = uni((4 * h, fan), fan)
        t[f"{name}.u"] = uni((4 * h, h), h)
        b = np.zeros(4 * h)
        b[h : 2 * h] = forget_bias
        t[f"{name}.b"] = b
    t["dense1.w"] = uni((d1, h), h)
    t["dense1.b"] = np.zeros(d1)
    t["bn1.gamma"] = np.ones(d1)
    t["bn1.beta"] = np.zeros(d1)
    t["dense2.w"] = uni((d2, d1), d1)
    t["dense2.b"] = np.zeros(d2)
    t["bn2.gamma"] = np.ones(d2)
    t["bn2.beta"] = np.zeros(d2)
    t["out.w"] = uni((n_out, d2), d2)
    t["out.b"] = np.zeros(n_out)
    running = {"bn1.mean": np.zeros(d1), "bn1.var": np.ones(d1), "bn2.mean": np.zeros(d2), "bn2.var": np.ones(d2)}
    return ModelParams(
        d_in=d_in,
        hidden=h,
        dense=(d1, d2),
        n_out=n_out,
        head=head,
        tensors={k: t[k] for k in TENSOR_ORDER},
        running=running,
    )


@dataclass
class ForwardCache:
    """Activations kept by a train-mode forward pass; consumed once by :func:`backward`."""

    lstm1: tuple
    lstm2: tuple
    n_steps: int
    a0: np.ndarray
    z1: np.ndarray
    bn1: tuple
    u1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    bn2: tuple
    u2: np.ndarray
    a2: np.ndarray
    probs: np.ndarray
    batch_stats: dict
    used: bool = False


def _scale_inputs(features: np.ndarray, params: ModelParams) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != params.d_in:
        raise ValueError(f"features of shape {np.shape(features)} do not match model input width {params.d_in}")
    if params.input_mean is not None:
        x = (x - params.input_mean) / params.input_std
    return x


def model_forward(features, params: ModelParams, mode: str = "infer"):
    """Map (B, K, D) feature sequences to (B, Q) output probabilities.

    ``train`` normalizes with batch statistics and also returns a
    :class:`ForwardCache`; ``infer`` uses the running statistics and returns
    the probabilities only.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "infer" and not params.bn_ready:
        raise RuntimeError("batch-norm running statistics are uninitialized; train or calibrate first")
    t = params.tensors
    x = _scale_inputs(features, params)
    h1, c1 = layers.lstm_layer_forward(x, t["lstm1.w"], t["lstm1.u"], t["lstm1.b"])
    h2, c2 = layers.lstm_layer_forward(h1, t["lstm2.w"], t["lstm2.u"], t["lstm2.b"])
    a0 = h2[:, -1]

    train = mode == "train"
    z1 = a0 @ t["dense1.w"].T + t["dense1.b"]
    run = params.running
    u1, bn1 = layers.batchnorm_forward(
        z1, t["bn1.gamma"], t["bn1.beta"], *(() if train else (run["bn1.mean"], run["bn1.var"]))
    )
    a1 = layers.leaky_relu(u1)
    z2 = a1 @ t["dense2.w"].T + t["dense2.b"]
    u2, bn2 = layers.batchnorm_forward(
        z2, t["bn2.gamma"], t["bn2.beta"], *(() if train else (run["bn2.mean"], run["bn2.var"]))
    )
    a2 = layers.leaky_relu(u2)
    logits = a2 @ t["out.w"].T + t["out.b"]
    probs = layers.sigmoid(logits) if params.head == SIGMOID else layers.softmax(logits)
    if not train:
        return probs
    stats = {"bn1": (bn1[3], z1.var(axis=0, ddof=1) if len(z1) > 1 else bn1[4]),
             "bn2": (bn2[3], z2.var(axis=0, ddof=1) if len(z2) > 1 else bn2[4])}  # fmt: skip
    cache = ForwardCache(c1, c2, x.shape[1], a0, z1, bn1, u1, a1, z2, bn2, u2, a2, probs, stats)
    return probs, cache


def update_running_stats(params: ModelParams, cache: ForwardCache) -> None:
    m = params.bn_momentum
    for name in ("bn1", "bn2"):
        mean, var = cache.batch_stats[name]
        if params.bn_ready:
            params.running[f"{name}.mean"] = m * params.running[f"{name}.mean"] + (1 - m) * mean
            params.running[f"{name}.var"] = m * params.running[f"{name}.var"] + (1 - m) * var
        else:
            params.running[f"{name}.mean"] = mean.copy()
            params.running[f"{name}.var"] = np.maximum(var, layers.BN_EPS)
    params.bn_ready = True


def calibrate_batchnorm(params: ModelParams, features) -> None:
    """Seed running statistics from one batch (used for untrained timing runs)."""
    params.bn_ready = False
    _, cache = model_forward(features, params, "train")
    update_running_stats(params, cache)


def default_loss_kind(params: ModelParams) -> str:
    return LOSS_BCE if params.head == SIGMOID else LOSS_CE


def loss(probs, targets, kind: str = LOSS_BCE) -> float:
    """Batch-mean loss summed over outputs.

    ``bce`` adds the complement term to the positives-only cross entropy;
    ``literal`` is the positives-only form; ``ce`` is categorical cross entropy.
    """
    probs = np.asarray(probs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if probs.shape != targets.shape:
        raise ValueError(f"probabilities {probs.shape} and targets {targets.shape} differ in shape")
    if probs.ndim == 1:
        probs, targets = probs[None], targets[None]
    y = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if kind == LOSS_BCE:
        per = -(targets * np.log(y) + (1.0 - targets) * np.log(1.0 - y))
    elif kind in (LOSS_LITERAL, LOSS_CE):
        per = -targets * np.log(y)
    else:
        raise ValueError(f"unknown loss kind {kind!r}")
    return float(per.sum() / probs.shape[0])


def output_grad(probs, targets, kind: str = LOSS_BCE) -> np.ndarray:
    """dL/d(logits) for the head/loss pair."""
    n_b = probs.shape[0]
    if kind in (LOSS_BCE, LOSS_CE):
        return (probs - targets) / n_b
    if kind == LOSS_LITERAL:
        return -targets * (1.0 - probs) / n_b
    raise ValueError(f"unknown loss kind {kind!r}")


def backward(cache: ForwardCache, targets, params: ModelParams, kind: str | None = None) -> dict[str, np.ndarray]:
    """Gradients of the loss for every tensor in ``params.tensors`` (same keys and shapes)."""
    if cache.used:
        raise RuntimeError("stale forward cache: run a new train-mode forward before backward")
    cache.used = True
    kind = kind or default_loss_kind(params)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != cache.probs.shape:
        raise ValueError(f"targets {targets.shape} do not match outputs {cache.probs.shape}")
    t = params.tensors
    g: dict[str, np.ndarray] = {}

    dlogits = output_grad(cache.probs, targets, kind)
    g["out.w"] = dlogits.T @ cache.a2
    g["out.b"] = dlogits.sum(axis=0)
    da2 = dlogits @ t["out.w"]
    du2 = layers.leaky_relu_backward(da2, cache.u2)
    dz2, g["bn2.gamma"], g["bn2.beta"] = layers.batchnorm_backward(du2, cache.bn2)
    g["dense2.w"] = dz2.T @ cache.a1
    g["dense2.b"] = dz2.sum(axis=0)
    da1 = dz2 @ t["dense2.w"]
    du1 = layers.leaky_relu_backward(da1, cache.u1)
    dz1, g["bn1.gamma"], g["bn1.beta"] = layers.batchnorm_backward(du1, cache.bn1)
    g["dense1.w"] = dz1.T @ cache.a0
    g["dense1.b"] = dz1.sum(axis=0)
    da0 = dz1 @ t["dense1.w"]

    n_b = da0.shape[0]
    dh2 = np.zeros((n_b, cache.n_steps, params.hidden))
    dh2[:, -1] = da0
    dh1, g["lstm2.w"], g["lstm2.u"], g["lstm2.b"] = layers.lstm_layer_backward(dh2, cache.lstm2)
    _, g["lstm1.w"], g["lstm1.u"], g["lstm1.b"] = layers.lstm_layer_backward(dh1, cache.lstm1)
    return {k: g[k] for k in TENSOR_ORDER}


def decode_codeword(probs, threshold: float = 0.5) -> int:
    """Deployed codeword: most probable index above ``threshold``, else the overall argmax."""
    probs = np.asarray(probs, dtype=float)
    if probs.size == 0:
        raise ValueError("empty probability vector")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    above = np.flatnonzero(probs > threshold)
    if above.size:
        return int(above[np.argmax(probs[above])])
    return int(np.argmax(probs))


def decode_batch(probs, threshold: float = 0.5) -> np.ndarray:
    return np.array([decode_codeword(p, threshold) for p in np.atleast_2d(probs)], dtype=np.int64)


def predict(params: ModelParams, features, threshold: float = 0.5, batch: int = 4096) -> np.ndarray:
    """Decoded codeword index for every sequence in ``features`` (B, K, D)."""
    out = [decode_batch(model_forward(features[s : s + batch], params, "infer"), threshold)
           for s in range(0, len(features), batch)]  # fmt: skip
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def batch_loss(params: ModelParams, features, targets, kind: str | None = None) -> float:
    probs, _ = model_forward(features, params, "train")
    return loss(probs, targets, kind or default_loss_kind(params))


def gradient_check_by_tensor(params: ModelParams, features, targets, step: float = 1e-6, kind: str | None = None):
    """Per-tensor max of |analytic - central difference| / max(1, |analytic|)."""
    kind = kind or default_loss_kind(params)
    _, cache = model_forward(features, params, "train")
    grads = backward(cache, targets, params, kind)
    result = {}
    for name in TENSOR_ORDER:
        flat = params.tensors[name].reshape(-1)
        worst = 0.0
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            lp = batch_loss(params, features, targets, kind)
            flat[idx] = orig - step
            lm = batch_loss(params, features, targets, kind)
            flat[idx] = orig
            ana = grads[name].reshape(-1)[idx]
            worst = max(worst, abs(ana - (lp - lm) / (2 * step)) / max(1.0, abs(ana)))
        result[name] = worst
    return result


def gradient_check(params: ModelParams, features, targets, step: float = 1e-6, kind: str | None = None) -> float:
    return max(gradient_check_by_tensor(params, features, targets, step, kind).values())


def forward_macs(params: ModelParams, n_steps: int) -> int:
    """Multiply-accumulates of one single-sample inference pass."""
    h = params.hidden
    d1, d2 = params.dense
    lstm = n_steps * (4 * h * (params.d_in + h + 1) + 4 * h * (h + h + 1))
    head = d1 * (h + 1) + d2 * (d1 + 1) + params.n_out * (d2 + 1)
    return lstm + head
