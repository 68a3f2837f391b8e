"""Kronecker DFT codebooks for the RIS, ideal and hardware-adjusted."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sysmodel import SystemConfig, amplitude_model, steering_vector

IDEAL = "ideal"
PRACTICAL = "practical"


@dataclass(frozen=True)
class Codebook:
    """``Q = n_h * n_v`` RIS response vectors stored row-wise in ``words`` (Q x N).

    Word ``q = i * n_v + j`` pairs azimuth index ``i`` with elevation index ``j``.
    """

    words: np.ndarray
    kind: str
    n_h: int
    n_v: int

    @property
    def size(self) -> int:
        return self.words.shape[0]

    def __len__(self) -> int:
        return self.size

    def phases(self) -> np.ndarray:
        return np.angle(self.words)


def quantized_angles(n_h: int, n_v: int) -> tuple[np.ndarray, np.ndarray]:
    if n_h < 1 or n_v < 1:
        raise ValueError(f"codebook dimensions must be >= 1, got ({n_h}, {n_v})")
    return np.arange(n_h) * (2 * math.pi / n_h), np.arange(n_v) * (2 * math.pi / n_v)


def build_ideal_codebook(n_h: int, n_v: int) -> Codebook:
    az, el = quantized_angles(n_h, n_v)
    words = np.array([np.kron(steering_vector(n_h, a), steering_vector(n_v, e)) for a in az for e in el])
    words.setflags(write=False)
    return Codebook(words=words, kind=IDEAL, n_h=n_h, n_v=n_v)


def apply_hardware_model(cb: Codebook, cfg: SystemConfig) -> Codebook:
    """Scale each unit-modulus entry by the phase-dependent reflection amplitude."""
    if cb.kind != IDEAL:
        raise RuntimeError(f"hardware model already applied (codebook kind {cb.kind!r})")
    phase = np.angle(cb.words)
    words = amplitude_model(phase, cfg) * np.exp(1j * phase)
    words.setflags(write=False)
    return Codebook(words=words, kind=PRACTICAL, n_h=cb.n_h, n_v=cb.n_v)


def build_codebook(cfg: SystemConfig, ideal: bool = False) -> Codebook:
    cb = build_ideal_codebook(cfg.n_h, cfg.n_v)
    return cb if ideal else apply_hardware_model(cb, cfg)


def export_codebook(cb: Codebook, path) -> None:
    """Write ``<path>.json`` metadata and ``<path>.c128le`` interleaved (re, im) doubles, word-major."""
    path = Path(path)
    meta = {
        "kind": cb.kind,
        "n_h": cb.n_h,
        "n_v": cb.n_v,
        "q": cb.size,
        "n": cb.words.shape[1],
        "dtype": "f64le",
        "layout": "word-major, interleaved re/im",
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    inter = np.empty(cb.words.shape + (2,), dtype="<f8")
    inter[..., 0] = cb.words.real
    inter[..., 1] = cb.words.imag
    path.with_suffix(".c128le").write_bytes(inter.tobytes())


def import_codebook(path) -> Codebook:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    raw = np.frombuffer(path.with_suffix(".c128le").read_bytes(), dtype="<f8")
    if raw.size != meta["q"] * meta["n"] * 2:
        raise ValueError(f"codebook payload has {raw.size} doubles, expected {meta['q'] * meta['n'] * 2}")
    raw = raw.reshape(meta["q"], meta["n"], 2)
    words = raw[..., 0] + 1j * raw[..., 1]
    words.setflags(write=False)
    return Codebook(words=words, kind=meta["kind"], n_h=meta["n_h"], n_v=meta["n_v"])
