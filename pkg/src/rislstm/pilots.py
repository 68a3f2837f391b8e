"""Uplink pilots, received-signal synthesis and network feature preprocessing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sysmodel import ChannelPair, RisConfig, SystemConfig, effective_channel, ris_config_from_phases

KRON_EVEN = "kron-even"
RAW = "raw"
FEATURE_MODES = (KRON_EVEN, RAW)

_QAM16_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0])
QAM16_MEAN_ENERGY = 10.0


@dataclass
class PilotBlock:
    pilots: np.ndarray  # N_r x K
    received: np.ndarray  # N_t x K
    reference_ris: RisConfig


def generate_pilots(cfg: SystemConfig, p_ul_watts: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. 16-QAM pilot matrix (N_r x K) with per-entry mean energy ``p_ul / N_r``."""
    shape = (cfg.n_rx, cfg.pilot_len)
    re = _QAM16_LEVELS[rng.integers(4, size=shape)]
    im = _QAM16_LEVELS[rng.integers(4, size=shape)]
    return math.sqrt(p_ul_watts / (QAM16_MEAN_ENERGY * cfg.n_rx)) * (re + 1j * im)


def reference_state(cfg: SystemConfig, rng: np.random.Generator | None = None) -> RisConfig:
    """Fixed surface state used while pilots are received.

    All-zero phases by default; a seeded-random phase pattern when ``rng`` is
    given. Hardware amplitudes apply in both cases.
    """
    if rng is None:
        phases = np.zeros(cfg.n_ris)
    else:
        phases = rng.uniform(-math.pi, math.pi, size=cfg.n_ris)
    return ris_config_from_phases(phases, cfg)


def uplink_receive(
    ch: ChannelPair, reference: RisConfig, pilots: np.ndarray, noise_watts: float, rng: np.random.Generator
) -> np.ndarray:
    h_eff = effective_channel(ch, reference)
    if pilots.shape[0] != h_eff.shape[0]:
        raise ValueError(f"pilot rows {pilots.shape[0]} != user antennas {h_eff.shape[0]}")
    shape = (h_eff.shape[1], pilots.shape[1])
    noise = math.sqrt(noise_watts / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return h_eff.conj().T @ pilots + noise


def feature_dim(n_tx: int, n_ris: int, mode: str) -> int:
    if mode == KRON_EVEN:
        return 2 * n_tx * ((n_ris + 1) // 2)
    if mode == RAW:
        return 2 * n_tx
    raise ValueError(f"unknown feature mode {mode!r}")


def preprocess_features(received: np.ndarray, reference: RisConfig, mode: str = KRON_EVEN) -> np.ndarray:
    """Turn the N_t x K received block into a K x D real sequence.

    ``kron-even`` takes the reference response at even (0-based) element
    indices and forms ``r(k) kron phi_even`` per pilot step; ``raw`` uses
    ``r(k)`` alone. Each step is the real parts followed by the imaginary parts.
    """
    if mode == KRON_EVEN:
        phi_even = reference.response[::2]
        steps = (received.T[:, :, None] * phi_even[None, None, :]).reshape(received.shape[1], -1)
    elif mode == RAW:
        steps = received.T
    else:
        raise ValueError(f"unknown feature mode {mode!r}")
    return np.concatenate([steps.real, steps.imag], axis=1)
