"""SVD precoding and spectral efficiency under equal power split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PrecodingResult:
    precoder: np.ndarray  # N_t x N_s
    singulars: np.ndarray  # descending
    n_streams: int
    rate_bps_hz: float | None = None


def svd_precoder(h_eff: np.ndarray, rel_tol: float = 1e-8) -> PrecodingResult:
    """Right singular vectors of the effective channel, one per significant singular value.

    A zero channel yields ``n_streams == 0`` and an empty ``N_t x 0`` precoder.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    h_eff = np.asarray(h_eff)
    if not np.all(np.isfinite(h_eff)):
        raise ValueError("effective channel has non-finite entries")
    _, s, vh = np.linalg.svd(h_eff, full_matrices=False)
    n_s = int(np.count_nonzero(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    return PrecodingResult(precoder=vh[:n_s].conj().T, singulars=s[:n_s], n_streams=n_s)


def spectral_efficiency(singulars, p_watts: float, noise_watts: float, n_streams: int | None = None) -> float:
    singulars = np.asarray(singulars, dtype=float)
    if n_streams is None:
        n_streams = singulars.size
    if n_streams == 0:
        return 0.0
    if n_streams != singulars.size:
        raise ValueError(f"n_streams={n_streams} but {singulars.size} singular values given")
    snr = p_watts / (noise_watts * n_streams)
    return float(np.sum(np.log2(1.0 + snr * singulars**2)))


def spectral_efficiency_det(h_eff, precoder, p_watts: float, noise_watts: float, n_streams: int) -> float:
    """Rate from the log-determinant form; independent check on :func:`spectral_efficiency`.

    Evaluated as ``log2 det(I_Ns + P/(sigma^2 Ns) F^H H^H H F)``, the N_s x N_s
    arrangement of the determinant.
    """
    h_eff = np.asarray(h_eff)
    precoder = np.asarray(precoder)
    if precoder.ndim != 2 or precoder.shape[0] != h_eff.shape[1]:
        raise ValueError(f"precoder shape {precoder.shape} incompatible with channel {h_eff.shape}")
    if n_streams == 0:
        return 0.0
    hf = h_eff @ precoder  # N_r x N_s
    gram = hf.conj().T @ hf
    m = np.eye(gram.shape[0]) + (p_watts / (noise_watts * n_streams)) * gram
    _, logdet = np.linalg.slogdet(m)
    return float(logdet / np.log(2.0))


def rate_for_channel(h_eff, p_watts: float, noise_watts: float, rel_tol: float = 1e-8) -> float:
    """Rate with the SVD precoder and stream count recomputed for this channel."""
    s = np.linalg.svd(h_eff, compute_uv=False)
    if s.size == 0 or s[0] <= 0:
        return 0.0
    s = s[s > rel_tol * s[0]]
    return spectral_efficiency(s, p_watts, noise_watts, s.size)


def rates_batch(h_stack: np.ndarray, p_watts: float, noise_watts: float, rel_tol: float = 1e-8) -> np.ndarray:
    """Vectorized :func:`rate_for_channel` over a stack of channels (..., N_r, N_t)."""
    s = np.linalg.svd(h_stack, compute_uv=False)
    top = s[..., :1]
    keep = (s > rel_tol * top) & (top > 0)
    n_s = keep.sum(axis=-1)
    snr = p_watts / (noise_watts * np.maximum(n_s, 1))
    terms = np.where(keep, np.log2(1.0 + snr[..., None] * s**2), 0.0)
    return terms.sum(axis=-1)
