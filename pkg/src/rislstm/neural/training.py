"""Mini-batch training with validation-based early stopping."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import rng as rngs
from .model import (
    ModelParams,
    backward,
    default_loss_kind,
    loss,
    model_forward,
    update_running_stats,
)
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 2000
    learning_rate: float = 1e-2
    max_epochs: int = 50
    patience: int = 2
    sigmoid_threshold: float = 0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    loss_kind: str | None = None  # None picks the head's natural loss
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.sigmoid_threshold < 1.0:
            raise ValueError("sigmoid_threshold must lie in (0, 1)")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1

    def __len__(self) -> int:
        return len(self.val_loss)


def fit_input_scaling(params: ModelParams, features: np.ndarray) -> None:
    """Per-dimension standardization fitted on the training features."""
    flat = np.asarray(features, dtype=float).reshape(-1, features.shape[-1])
    params.input_mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    params.input_std = np.where(std > 0, std, 1.0)


def evaluate_loss(params: ModelParams, features, targets, kind: str, batch: int = 4096) -> float:
    total = 0.0
    for s in range(0, len(features), batch):
        probs = model_forward(features[s : s + batch], params, "infer")
        total += loss(probs, targets[s : s + batch], kind) * len(probs)
    return total / len(features)


def train(
    train_x: np.ndarray,
    train_t: np.ndarray,
    val_x: np.ndarray,
    val_t: np.ndarray,
    params: ModelParams,
    tcfg: TrainConfig,
) -> tuple[ModelParams, History]:
    """Train a copy of ``params``; returns the best-validation-loss parameters and the loss history.

    Inputs are (B, K, D) feature arrays and (B, Q) target arrays. Input scaling
    is fitted on ``train_x`` unless ``params`` already carries one.
    """
    history = History()
    if tcfg.max_epochs == 0:
        return params.copy(), history
    if len(train_x) == 0 or len(val_x) == 0:
        raise ValueError("training and validation splits must be non-empty")
    for x, t in ((train_x, train_t), (val_x, val_t)):
        if x.ndim != 3 or x.shape[2] != params.d_in:
            raise ValueError(f"feature width {x.shape[-1]} does not match model input {params.d_in}")
        if t.shape != (len(x), params.n_out):
            raise ValueError(f"targets shape {t.shape} does not match ({len(x)}, {params.n_out})")

    kind = tcfg.loss_kind or default_loss_kind(params)
    model = params.copy()
    if model.input_mean is None:
        fit_input_scaling(model, train_x)
    opt = AdamState(beta1=tcfg.adam_beta1, beta2=tcfg.adam_beta2, eps=tcfg.adam_eps)
    train_t = np.asarray(train_t, dtype=float)
    val_t = np.asarray(val_t, dtype=float)

    best, best_val, stale = None, np.inf, 0
    n = len(train_x)
    for epoch in range(tcfg.max_epochs):
        order = rngs.stream(tcfg.seed, rngs.SHUFFLE, epoch).permutation(n)
        run_loss = 0.0
        for s in range(0, n, tcfg.batch_size):
            idx = order[s : s + tcfg.batch_size]
            probs, cache = model_forward(train_x[idx], model, "train")
            run_loss += loss(probs, train_t[idx], kind) * len(idx)
            grads = backward(cache, train_t[idx], model, kind)
            adam_step(model.tensors, grads, opt, tcfg.learning_rate)
            update_running_stats(model, cache)
        val = evaluate_loss(model, val_x, val_t, kind)
        history.train_loss.append(run_loss / n)
        history.val_loss.append(val)
        log.info("epoch %d train %.5f val %.5f", epoch, run_loss / n, val)
        if val < best_val:
            best, best_val, stale = model.copy(), val, 0
            history.best_epoch = epoch
        else:
            stale += 1
            if stale >= tcfg.patience:
                break
    return best, history
