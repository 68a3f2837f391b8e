"""System configuration, Rician channel realizations and the RIS hardware model."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Physical, hardware and pilot constants of the RIS-assisted link.

    Angles are in radians, distances in meters, powers in dBm. ``n_ris`` is
    derived from the planar array geometry and is not stored separately.
    """

    n_tx: int = 10
    n_rx: int = 2
    n_h: int = 8
    n_v: int = 8
    n_paths: int = 2
    rician_t: float = 10.0
    rician_r: float = 10.0
    pl_exp_t: float = 2.0
    pl_exp_r: float = 2.8
    dist_t: float = 10.0
    dist_r: float = 30.0
    ref_dist: float = 1.0
    ref_loss_db: float = -30.0
    ris_gain_db: float = 5.0
    beta_min: float = 0.2
    alpha: float = 1.6
    psi0: float = 0.43 * math.pi
    noise_dbm: float = -80.0
    powers_dbm: tuple[float, ...] = (20.0, 30.0, 40.0, 50.0, 60.0)
    pilot_len: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "powers_dbm", tuple(float(p) for p in self.powers_dbm))
        for name in ("n_tx", "n_rx", "n_h", "n_v", "n_paths", "pilot_len"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 < self.beta_min <= 1.0:
            raise ValueError(f"beta_min must lie in (0, 1], got {self.beta_min}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.rician_t < 0 or self.rician_r < 0:
            raise ValueError("Rician factors must be non-negative")
        if self.ref_dist <= 0:
            raise ValueError("ref_dist must be positive")
        if self.dist_t < self.ref_dist or self.dist_r < self.ref_dist:
            raise ValueError("link distances must be >= ref_dist")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    @property
    def n_ris(self) -> int:
        return self.n_h * self.n_v

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["powers_dbm"] = list(self.powers_dbm)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown SystemConfig keys: {unknown}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SystemConfig":
        return cls.from_dict(json.loads(text))


def desk_config(**overrides) -> SystemConfig:
    """Reduced profile (N_t=4, N_r=2, 4x4 RIS, K=8) that trains on a laptop CPU."""
    base = dict(n_tx=4, n_rx=2, n_h=4, n_v=4, pilot_len=8)
    base.update(overrides)
    return SystemConfig(**base)


@dataclass
class ChannelPair:
    h_t: np.ndarray  # N x N_t, BS -> RIS
    h_r_herm: np.ndarray  # N_r x N, RIS -> user (already Hermitian-transposed)
    l_t: float
    l_r: float


@dataclass
class RisConfig:
    phases: np.ndarray
    amplitudes: np.ndarray
    response: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.response.shape[0]


def steering_vector(n: int, theta: float) -> np.ndarray:
    """ULA response ``[1, e^{-j theta}, ..., e^{-j (n-1) theta}]``."""
    if n < 1:
        raise ValueError(f"steering vector length must be >= 1, got {n}")
    return np.exp(-1j * theta * np.arange(n))


def path_loss_linear(exp: float, dist: float, cfg: SystemConfig) -> float:
    if dist < cfg.ref_dist:
        raise ValueError(f"distance {dist} below reference distance {cfg.ref_dist}")
    db = cfg.ref_loss_db - 10.0 * exp * math.log10(dist / cfg.ref_dist) + cfg.ris_gain_db
    return 10.0 ** (db / 10.0)


def amplitude_model(psi, cfg: SystemConfig):
    """Reflection amplitude of an element set to phase ``psi`` (scalar or array).

    The amplitude bottoms out at ``beta_min`` for ``psi = psi0 - pi/2`` and
    reaches 1 at ``psi = psi0 + pi/2``.
    """
    s = (np.sin(np.asarray(psi, dtype=float) - cfg.psi0) + 1.0) / 2.0
    # sin can overshoot 1 by an ulp; keep the base inside [0, 1]
    beta = (1.0 - cfg.beta_min) * np.clip(s, 0.0, 1.0) ** cfg.alpha + cfg.beta_min
    return float(beta) if np.ndim(beta) == 0 else beta


def ris_config_from_phases(phases, cfg: SystemConfig, ideal: bool = False) -> RisConfig:
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (cfg.n_ris,):
        raise ValueError(f"expected {cfg.n_ris} phases, got shape {phases.shape}")
    amps = np.ones_like(phases) if ideal else amplitude_model(phases, cfg)
    return RisConfig(phases=phases.copy(), amplitudes=amps, response=amps * np.exp(1j * phases))


def _gains(rng: np.random.Generator, k: float, n_paths: int) -> np.ndarray:
    z = np.empty(n_paths + 1, dtype=complex)
    z[0] = math.sqrt(k / (k + 1.0)) if math.isfinite(k) else 1.0
    var = 1.0 / (n_paths * (k + 1.0)) if math.isfinite(k) else 0.0
    z[1:] = math.sqrt(var / 2.0) * (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths))
    return z


def sample_channels(cfg: SystemConfig, rng: np.random.Generator) -> ChannelPair:
    """Draw one BS->RIS and RIS->user realization (LOS path plus ``n_paths`` NLOS paths).

    All steering phases are drawn uniformly on [0, 2*pi). Draw order is fixed:
    BS-side gains and angles, then user-side gains and angles.
    """
    n_p = cfg.n_paths + 1
    l_t = path_loss_linear(cfg.pl_exp_t, cfg.dist_t, cfg)
    l_r = path_loss_linear(cfg.pl_exp_r, cfg.dist_r, cfg)

    z_t = _gains(rng, cfg.rician_t, cfg.n_paths)
    ang_t = rng.uniform(0.0, 2 * math.pi, size=(n_p, 3))  # theta_t, phi_h, phi_v
    z_r = _gains(rng, cfg.rician_r, cfg.n_paths)
    ang_r = rng.uniform(0.0, 2 * math.pi, size=(n_p, 3))  # theta_r, varphi_h, varphi_v

    h_t = np.zeros((cfg.n_ris, cfg.n_tx), dtype=complex)
    h_r = np.zeros((cfg.n_rx, cfg.n_ris), dtype=complex)
    for ell in range(n_p):
        theta, ph, pv = ang_t[ell]
        ris_in = np.conj(np.kron(steering_vector(cfg.n_h, ph), steering_vector(cfg.n_v, pv)))
        h_t += z_t[ell] * np.outer(ris_in, steering_vector(cfg.n_tx, theta))

        theta, vh, vv = ang_r[ell]
        ris_out = np.kron(steering_vector(cfg.n_v, vv), steering_vector(cfg.n_h, vh))
        h_r += z_r[ell] * np.outer(np.conj(steering_vector(cfg.n_rx, theta)), ris_out)

    return ChannelPair(h_t=math.sqrt(l_t) * h_t, h_r_herm=math.sqrt(l_r) * h_r, l_t=l_t, l_r=l_r)


def effective_channel(ch: ChannelPair, ris) -> np.ndarray:
    """Cascaded channel ``H_r^H diag(response) H_t`` (N_r x N_t).

    ``ris`` may be a RisConfig or a bare response vector.
    """
    resp = ris.response if isinstance(ris, RisConfig) else np.asarray(ris)
    if resp.shape != (ch.h_t.shape[0],) or ch.h_r_herm.shape[1] != ch.h_t.shape[0]:
        raise ValueError(
            f"dimension mismatch: response {resp.shape}, H_t {ch.h_t.shape}, H_r^H {ch.h_r_herm.shape}"
        )
    return (ch.h_r_herm * resp) @ ch.h_t
