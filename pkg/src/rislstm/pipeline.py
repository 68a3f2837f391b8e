"""Named profiles and the train/evaluate glue used by the CLI and the acceptance suite."""

from __future__ import annotations

import numpy as np

from . import rng as rngs
from .dataset import Dataset
from .neural.model import SIGMOID, SOFTMAX, ModelParams, init_params, predict
from .neural.training import History, TrainConfig, train
from .sysmodel import SystemConfig, desk_config

FULL_HIDDEN = 140
FULL_DENSE = (200, 100)

# desk profile: widths shrunk so the whole pipeline runs on one CPU core
DESK_HIDDEN = 32
DESK_DENSE = (64, 32)
DESK_SAMPLES = 20_000
DESK_FRACTIONS = (0.85, 0.10, 0.05)  # 17000 / 2000 / 1000
DESK_TRAIN = dict(batch_size=500, learning_rate=1e-2, max_epochs=40, patience=2)


def profile(name: str) -> tuple[SystemConfig, int, tuple[int, int]]:
    if name == "desk":
        return desk_config(), DESK_HIDDEN, DESK_DENSE
    if name == "full":
        return SystemConfig(), FULL_HIDDEN, FULL_DENSE
    raise ValueError(f"unknown profile {name!r} (expected 'desk' or 'full')")


def train_model(
    train_ds: Dataset,
    val_ds: Dataset,
    hidden: int,
    dense: tuple[int, int],
    tcfg: TrainConfig,
    single_label: bool = False,
) -> tuple[ModelParams, History]:
    """Initialize from ``tcfg.seed`` and train on multi-hot labels, or on one-hot ES labels with a softmax head."""
    params = init_params(
        train_ds.meta.feature_dim,
        train_ds.meta.n_codewords,
        hidden=hidden,
        dense=dense,
        rng=rngs.stream(tcfg.seed, rngs.INIT),
        head=SOFTMAX if single_label else SIGMOID,
    )
    if single_label:
        tr_t, va_t = train_ds.one_hot_best(), val_ds.one_hot_best()
    else:
        tr_t, va_t = train_ds.labels, val_ds.labels
    return train(train_ds.features, tr_t, val_ds.features, va_t, params, tcfg)


def evaluate_split(model: ModelParams, ds: Dataset, threshold: float = 0.5, seed: int = 0) -> dict:
    """Normalized SE (%) of the LSTM and of random selection on a labelled split, at its labelling power."""
    if ds.rates is None:
        raise ValueError("dataset split has no stored rates")
    rates = ds.rates.astype(float)
    rows = np.arange(len(ds))
    idx = predict(model, ds.features, threshold)
    pick = rngs.stream(seed, rngs.EVAL).integers(ds.meta.n_codewords, size=len(ds))
    es = rates.max(axis=1).mean()
    lstm = rates[rows, idx].mean()
    rand = rates[rows, pick].mean()
    return {
        "count": len(ds),
        "es_mean": float(es),
        "lstm_mean": float(lstm),
        "random_mean": float(rand),
        "lstm_norm_pct": float(100 * lstm / es),
        "random_norm_pct": float(100 * rand / es),
        "label_hit_rate": float(ds.labels[rows, idx].mean()),
    }
