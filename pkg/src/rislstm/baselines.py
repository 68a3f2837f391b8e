"""Reference RIS selection schemes: exhaustive search, alternating optimization, random."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .precoding import rates_batch
from .sysmodel import ChannelPair, RisConfig, SystemConfig, amplitude_model, ris_config_from_phases

NEAR_OPT_DB = 0.5


@dataclass
class SearchOutcome:
    best_index: int
    best_rate: float
    rates: np.ndarray
    label_set: np.ndarray


def codebook_rates(ch: ChannelPair, cb: Codebook, p_watts: float, noise_watts: float) -> np.ndarray:
    """Rate of every codeword, SVD precoder recomputed per word."""
    # (Q, N_r, N) scaled columns times (N, N_t)
    h_eff = (ch.h_r_herm[None, :, :] * cb.words[:, None, :]) @ ch.h_t
    return rates_batch(h_eff, p_watts, noise_watts)


def near_optimal_label_set(rates, delta_db: float = NEAR_OPT_DB) -> np.ndarray:
    """Mark every codeword whose rate is within ``delta_db`` (as a rate ratio) of the best."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise ValueError("empty rate vector")
    if delta_db < 0:
        raise ValueError(f"delta_db must be >= 0, got {delta_db}")
    best = rates.max()
    labels = rates >= best * 10.0 ** (-delta_db / 10.0)
    labels[int(np.argmax(rates))] = True
    return labels


def exhaustive_search(
    ch: ChannelPair, cb: Codebook, p_watts: float, noise_watts: float, delta_db: float = NEAR_OPT_DB
) -> SearchOutcome:
    if cb.size == 0:
        raise ValueError("empty codebook")
    rates = codebook_rates(ch, cb, p_watts, noise_watts)
    best = int(np.argmax(rates))  # first maximum wins ties
    return SearchOutcome(
        best_index=best,
        best_rate=float(rates[best]),
        rates=rates,
        label_set=near_optimal_label_set(rates, delta_db),
    )


def alternating_optimization(
    ch: ChannelPair,
    cfg: SystemConfig,
    p_watts: float,
    phase_grid: int = 16,
    max_sweeps: int = 30,
    tol: float = 1e-4,
    history: list | None = None,
) -> tuple[RisConfig, float]:
    """Coordinate ascent over quantized element phases with hardware amplitudes.

    Each sweep refreshes the SVD precoder for the current surface, then visits
    the elements in order and keeps, per element, the grid phase that maximizes
    the rate (the SVD precoder being recomputed for every candidate). The
    current phase always stays a candidate, so the rate never decreases.
    ``history`` (if given) receives the rate after each sweep.
    """
    if phase_grid < 2:
        raise ValueError(f"phase_grid must be >= 2, got {phase_grid}")
    noise = cfg.noise_watts
    grid = -math.pi + 2 * math.pi * np.arange(phase_grid) / phase_grid
    grid_resp = amplitude_model(grid, cfg) * np.exp(1j * grid)

    phases = np.zeros(cfg.n_ris)
    resp = amplitude_model(phases, cfg) * np.exp(1j * phases)
    # rank-one contribution of each element: h_r[:, n] h_t[n, :]
    outer = ch.h_r_herm.T[:, :, None] * ch.h_t[:, None, :]
    h_eff = np.tensordot(resp, outer, axes=1)
    rate = float(rates_batch(h_eff[None], p_watts, noise)[0])

    for _ in range(max_sweeps):
        start = rate
        for n in range(cfg.n_ris):
            cand_resp = np.append(grid_resp, resp[n])
            cand = h_eff[None] + (cand_resp - resp[n])[:, None, None] * outer[n][None]
            r = rates_batch(cand, p_watts, noise)
            k = int(np.argmax(r))
            if r[k] > rate and k < phase_grid:
                phases[n], resp[n] = grid[k], grid_resp[k]
                h_eff = cand[k]
                rate = float(r[k])
        if history is not None:
            history.append(rate)
        if rate - start < tol:
            break

    return ris_config_from_phases(phases, cfg), rate


def random_selection(cb: Codebook, rng: np.random.Generator) -> int:
    if cb.size < 1:
        raise ValueError("empty codebook")
    return int(rng.integers(cb.size))
