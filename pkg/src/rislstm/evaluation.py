"""Power sweeps, latency benchmarks, FLOP/energy estimates, robustness study and report export."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import rng as rngs
from .baselines import alternating_optimization, codebook_rates, random_selection
from .codebook import PRACTICAL
from .dataset import DEFAULT_LABEL_DBM, make_generator
from .neural.model import ModelParams, decode_codeword, forward_macs, model_forward, predict
from .pilots import KRON_EVEN, feature_dim
from .sysmodel import SystemConfig, dbm_to_watts, sample_channels

ES, AO, LSTM, RANDOM = "ES", "AO", "LSTM", "Random"
ALL_SCHEMES = (ES, AO, LSTM, RANDOM)
JOULES_PER_FLOP = 0.1 / 1e9
CSV_HEADER = ("power_dbm", "scheme", "mean_se", "norm_se_pct", "p5", "p95", "ms_median", "flops", "joules")


@dataclass
class SchemeRow:
    power_dbm: float
    scheme: str
    mean_se: float
    norm_se_pct: float
    p5: float
    p95: float
    ms_median: float | None = None
    flops: float | None = None
    joules: float | None = None


@dataclass
class EvalReport:
    rows: list[SchemeRow]
    metadata: dict = field(default_factory=dict)

    def row(self, power_dbm: float, scheme: str) -> SchemeRow:
        for r in self.rows:
            if r.scheme == scheme and math.isclose(r.power_dbm, power_dbm):
                return r
        raise KeyError((power_dbm, scheme))

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "metadata": self.metadata}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(rows=[SchemeRow(**r) for r in d["rows"]], metadata=d["metadata"])


def config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(cfg.to_json().encode()).hexdigest()[:16]


def check_model(model: ModelParams, cfg: SystemConfig, feature_mode: str = KRON_EVEN) -> None:
    d = feature_dim(cfg.n_tx, cfg.n_ris, feature_mode)
    if model.d_in != d or model.n_out != cfg.n_h * cfg.n_v:
        raise ValueError(
            f"model (D={model.d_in}, Q={model.n_out}) does not match config (D={d}, Q={cfg.n_h * cfg.n_v})"
        )


def _summarize(values: dict, powers, es_key=ES) -> list[SchemeRow]:
    rows = []
    for p in powers:
        es_mean = float(np.mean(values[(p, es_key)]))
        for scheme in [s for s in ALL_SCHEMES if (p, s) in values]:
            v = np.asarray(values[(p, scheme)], dtype=float)
            rows.append(
                SchemeRow(
                    power_dbm=float(p),
                    scheme=scheme,
                    mean_se=float(v.mean()),
                    norm_se_pct=float(100.0 * v.mean() / es_mean) if es_mean > 0 else 0.0,
                    p5=float(np.percentile(v, 5)),
                    p95=float(np.percentile(v, 95)),
                )
            )
    return rows


def run_power_sweep(
    model: ModelParams | None,
    cfg: SystemConfig,
    schemes=ALL_SCHEMES,
    trials: int = 100,
    seed: int = 1,
    powers=None,
    *,
    pilot_power_dbm: float = DEFAULT_LABEL_DBM,
    threshold: float = 0.5,
    feature_mode: str = KRON_EVEN,
    reference: str = "zero",
    codebook_kind: str = PRACTICAL,
    ao_sweeps: int = 30,
    ao_grid: int = 16,
) -> EvalReport:
    """Mean rate of each scheme at each transmit power over fresh channel draws.

    Pilots are received at the fixed uplink power ``pilot_power_dbm`` so the
    network sees the same input distribution at every downlink power. ES is
    always evaluated since it anchors the normalized column.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    schemes = tuple(s for s in ALL_SCHEMES if s in set(schemes) | {ES})
    powers = tuple(cfg.powers_dbm if powers is None else powers)
    if LSTM in schemes:
        if model is None:
            raise ValueError("LSTM scheme requested without a model")
        check_model(model, cfg, feature_mode)
    gen = make_generator(cfg, seed, pilot_power_dbm=pilot_power_dbm, feature_mode=feature_mode,
                         codebook_kind=codebook_kind, reference=reference)  # fmt: skip
    cb = gen.codebook
    noise = cfg.noise_watts
    values: dict = {(p, s): [] for p in powers for s in schemes}

    channels = [sample_channels(cfg, rngs.stream(seed, rngs.CHANNEL, t)) for t in range(trials)]
    lstm_idx = None
    if LSTM in schemes:
        feats = np.stack([gen.features(t, ch) for t, ch in enumerate(channels)])
        lstm_idx = predict(model, feats, threshold)
    for t, ch in enumerate(channels):
        pick_rng = rngs.stream(seed, rngs.EVAL, t)
        rand_idx = random_selection(cb, pick_rng)
        for p in powers:
            pw = dbm_to_watts(p)
            rates = codebook_rates(ch, cb, pw, noise)
            values[(p, ES)].append(rates.max())
            if RANDOM in schemes:
                values[(p, RANDOM)].append(rates[rand_idx])
            if LSTM in schemes:
                values[(p, LSTM)].append(rates[lstm_idx[t]])
            if AO in schemes:
                _, r = alternating_optimization(ch, cfg, pw, phase_grid=ao_grid, max_sweeps=ao_sweeps)
                values[(p, AO)].append(r)

    rows = _summarize(values, powers)
    for r in rows:
        flops, joules = estimate_flops_energy(r.scheme if r.scheme != LSTM else model, cfg, ao_sweeps=ao_sweeps,
                                              ao_grid=ao_grid)  # fmt: skip
        r.flops, r.joules = float(flops), float(joules)
    # only codebook-restricted schemes are bounded by ES; AO searches per-element phases
    flagged = sorted({r.scheme for r in rows if r.norm_se_pct > 100.0 + 1e-9})
    meta = {
        "config_hash": config_hash(cfg),
        "config": cfg.to_dict(),
        "seed": seed,
        "trials": trials,
        "powers_dbm": list(powers),
        "schemes": list(schemes),
        "pilot_power_dbm": pilot_power_dbm,
        "threshold": threshold,
        "codebook_kind": cb.kind,
        "exceeds_es": flagged,
    }
    return EvalReport(rows=rows, metadata=meta)


def normalized_se(model: ModelParams, cfg: SystemConfig, trials: int, seed: int, power_dbm: float = DEFAULT_LABEL_DBM,
                  **kw) -> dict:  # fmt: skip
    """Normalized SE (%) of LSTM and Random at one power."""
    rep = run_power_sweep(model, cfg, (ES, LSTM, RANDOM), trials, seed, powers=(power_dbm,), **kw)
    return {s: rep.row(power_dbm, s).norm_se_pct for s in (LSTM, RANDOM)}


def _median_ms(fn, reps: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts) * 1e3)


def benchmark_timing(
    model: ModelParams | None,
    cfg: SystemConfig,
    trials: int = 20,
    seed: int = 1,
    power_dbm: float = DEFAULT_LABEL_DBM,
    schemes=ALL_SCHEMES,
    reps: int = 5,
    warmup: int = 3,
) -> dict[str, float]:
    """Median wall-clock milliseconds per channel realization for each scheme.

    LSTM time covers one single-sample forward pass plus decoding; feature
    preparation is excluded, as for the other schemes' channel access.
    """
    gen = make_generator(cfg, seed, pilot_power_dbm=power_dbm)
    cb = gen.codebook
    pw = dbm_to_watts(power_dbm)
    noise = cfg.noise_watts
    out: dict[str, list[float]] = {s: [] for s in schemes}
    for t in range(trials):
        ch = sample_channels(cfg, rngs.stream(seed, rngs.CHANNEL, t))
        if ES in out:
            out[ES].append(_median_ms(lambda: int(np.argmax(codebook_rates(ch, cb, pw, noise))), reps, warmup))
        if AO in out:
            out[AO].append(_median_ms(lambda: alternating_optimization(ch, cfg, pw), 1, 0 if t else 1))
        if LSTM in out:
            x = gen.features(t, ch)[None]
            out[LSTM].append(_median_ms(lambda: decode_codeword(model_forward(x, model, "infer")[0]), reps, warmup))
        if RANDOM in out:
            r = rngs.stream(seed, rngs.EVAL, t)
            out[RANDOM].append(_median_ms(lambda: random_selection(cb, r), reps, warmup))
    return {s: float(np.median(v)) for s, v in out.items()}


def _svd_values_flops(m: int, n: int) -> float:
    # Golub-Van Loan count for singular values only of an m x n matrix, m >= n
    m, n = max(m, n), min(m, n)
    return 4.0 * m * n * n - 4.0 * n**3 / 3.0


def es_codeword_flops(cfg: SystemConfig) -> float:
    """Effective channel for one codeword plus its rate evaluation."""
    n, nt, nr = cfg.n_ris, cfg.n_tx, cfg.n_rx
    heff = 2.0 * (nr * n + nr * n * nt)  # column scaling, then the N_r x N x N_t product
    rate = _svd_values_flops(nr, nt) + 4.0 * nr  # plus per-stream log terms
    return heff + rate


def estimate_flops_energy(descriptor, cfg: SystemConfig, n_steps: int | None = None, ao_sweeps: int = 30,
                          ao_grid: int = 16) -> tuple[float, float]:  # fmt: skip
    """Analytic FLOPs per decision (2 per MAC) and energy at 0.1 J/GFLOP.

    ``descriptor`` is a scheme name or a :class:`ModelParams` for the LSTM.
    AO is costed at its full sweep budget.
    """
    if isinstance(descriptor, ModelParams):
        flops = 2.0 * forward_macs(descriptor, cfg.pilot_len if n_steps is None else n_steps)
    elif descriptor == ES:
        flops = cfg.n_h * cfg.n_v * es_codeword_flops(cfg)
    elif descriptor == AO:
        rank1 = 2.0 * cfg.n_rx * cfg.n_tx
        per_cand = rank1 + _svd_values_flops(cfg.n_rx, cfg.n_tx) + 4.0 * cfg.n_rx
        flops = ao_sweeps * cfg.n_ris * (ao_grid + 1) * per_cand
    elif descriptor == RANDOM:
        flops = 0.0
    else:
        raise ValueError(f"unknown scheme descriptor {descriptor!r}")
    return flops, flops * JOULES_PER_FLOP


ROBUST_PARAMS = ("pl_exp_t", "pl_exp_r", "rician_t", "rician_r")


def robustness_study(
    model: ModelParams,
    cfg: SystemConfig,
    perturb_frac: float = 0.2,
    trials: int = 500,
    seed: int = 2,
    power_dbm: float = DEFAULT_LABEL_DBM,
    **kw,
) -> dict:
    """LSTM normalized SE with each propagation parameter scaled by ``1 +/- perturb_frac``."""
    base = normalized_se(model, cfg, trials, seed, power_dbm, **kw)
    cases = {}
    for name in ROBUST_PARAMS:
        for sign in (+1, -1):
            pcfg = cfg.replace(**{name: getattr(cfg, name) * (1.0 + sign * perturb_frac)})
            cases[f"{name}{'+' if sign > 0 else '-'}{perturb_frac:g}"] = normalized_se(
                model, pcfg, trials, seed, power_dbm, **kw
            )
    worst_key = min(cases, key=lambda k: cases[k][LSTM])
    worst = cases[worst_key][LSTM]
    return {
        "perturb_frac": perturb_frac,
        "power_dbm": power_dbm,
        "trials": trials,
        "seed": seed,
        "unperturbed": base,
        "cases": cases,
        "worst_case": worst_key,
        "worst_norm_se_pct": worst,
        "worst_ratio": worst / base[LSTM] if base[LSTM] > 0 else 0.0,
    }


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        w.writerow([_fmt(r.power_dbm), r.scheme, _fmt(r.mean_se), _fmt(r.norm_se_pct), _fmt(r.p5), _fmt(r.p95),
                    _fmt(r.ms_median), _fmt(r.flops), _fmt(r.joules)])  # fmt: skip
    return buf.getvalue()


def export_report(report: EvalReport, path, fmt: str = "json") -> Path:
    path = Path(path)
    if fmt == "csv":
        path.write_text(report_csv(report))
    elif fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def load_report(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text()))


def attach_timing(report: EvalReport, timing: dict[str, float]) -> None:
    for r in report.rows:
        if r.scheme in timing:
            r.ms_median = timing[r.scheme]
