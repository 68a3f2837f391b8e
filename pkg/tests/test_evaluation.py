import time

import numpy as np
import pytest

from rislstm import rng as rngs
from rislstm.baselines import codebook_rates
from rislstm.codebook import Codebook, build_codebook
from rislstm.evaluation import (
    AO,
    CSV_HEADER,
    ES,
    LSTM,
    RANDOM,
    EvalReport,
    attach_timing,
    benchmark_timing,
    check_model,
    es_codeword_flops,
    estimate_flops_energy,
    export_report,
    load_report,
    report_csv,
    robustness_study,
    run_power_sweep,
)
from rislstm.neural.model import calibrate_batchnorm, init_params
from rislstm.pilots import KRON_EVEN, feature_dim
from rislstm.sysmodel import SystemConfig, dbm_to_watts, desk_config, sample_channels

DESK = desk_config()


def untrained(cfg, hidden=8, dense=(8, 8), seed=0):
    m = init_params(feature_dim(cfg.n_tx, cfg.n_ris, KRON_EVEN), cfg.n_h * cfg.n_v, hidden, dense,
                    rng=np.random.default_rng(seed))  # fmt: skip
    calibrate_batchnorm(m, np.random.default_rng(seed).standard_normal((32, cfg.pilot_len, m.d_in)))
    return m


def test_es_only_sweep_is_100_percent():
    rep = run_power_sweep(None, DESK, (ES,), trials=5, seed=1, powers=(20, 40))
    assert [r.scheme for r in rep.rows] == [ES, ES]
    assert all(r.norm_se_pct == pytest.approx(100.0) for r in rep.rows)
    assert rep.metadata["trials"] == 5


def test_sweep_reproducible_and_bounded():
    model = untrained(DESK)
    kw = dict(trials=3, seed=4, powers=(30, 50))
    a = run_power_sweep(model, DESK, (ES, LSTM, RANDOM, AO), **kw)
    b = run_power_sweep(model, DESK, (ES, LSTM, RANDOM, AO), **kw)
    assert a.to_dict() == b.to_dict()
    for r in a.rows:
        if r.scheme in (LSTM, RANDOM):
            assert 0 <= r.norm_se_pct <= 100 + 1e-9
        assert r.p5 <= r.p95
    assert set(a.metadata["exceeds_es"]) <= {AO}


def test_sweep_trials_and_mismatch_errors():
    with pytest.raises(ValueError):
        run_power_sweep(None, DESK, (ES,), trials=0)
    with pytest.raises(ValueError):
        run_power_sweep(None, DESK, (ES, LSTM), trials=1)
    wrong = untrained(SystemConfig(n_tx=4, n_rx=2, n_h=2, n_v=2, pilot_len=8))
    with pytest.raises(ValueError):
        check_model(wrong, DESK)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="random selection reaches ~63% of ES at desk scale (Q=16), above the 20-50% band")
def test_random_normalized_band_desk():
    rep = run_power_sweep(None, DESK, (ES, RANDOM), trials=300, seed=3, powers=(40,))
    assert 20 <= rep.row(40, RANDOM).norm_se_pct <= 50


def test_flops_formula_structure():
    cfg = SystemConfig()
    a = init_params(640, 64, hidden=40, dense=(20, 10), rng=np.random.default_rng(0))
    b = init_params(640, 64, hidden=80, dense=(20, 10), rng=np.random.default_rng(0))
    ratio = estimate_flops_energy(b, cfg)[0] / estimate_flops_energy(a, cfg)[0]
    assert 2 < ratio < 4
    # ES is a linear scan: Q times the fixed per-codeword cost
    assert estimate_flops_energy(ES, cfg)[0] == 64 * es_codeword_flops(cfg)
    assert estimate_flops_energy(ES, SystemConfig(n_h=8, n_v=4))[0] < estimate_flops_energy(ES, cfg)[0]
    flops, joules = estimate_flops_energy(RANDOM, cfg)
    assert flops == 0 and joules == 0
    f, j = estimate_flops_energy(ES, cfg)
    assert j == pytest.approx(f * 1e-10)
    with pytest.raises(ValueError):
        estimate_flops_energy("CNN", cfg)


def test_es_time_roughly_doubles_with_q():
    cfg = SystemConfig()
    cb = build_codebook(cfg)
    double = Codebook(words=np.concatenate([cb.words, cb.words[::-1]]), kind=cb.kind, n_h=8, n_v=16)
    ch = sample_channels(cfg, rngs.stream(0, rngs.CHANNEL))
    pw = dbm_to_watts(40)

    def median_ms(book):
        ts = []
        for _ in range(3):
            codebook_rates(ch, book, pw, cfg.noise_watts)
        for _ in range(31):
            t0 = time.perf_counter()
            codebook_rates(ch, book, pw, cfg.noise_watts)
            ts.append(time.perf_counter() - t0)
        return np.median(ts)

    ratio = median_ms(double) / median_ms(cb)
    assert 2 * 0.7 <= ratio <= 2 * 1.3


def test_benchmark_timing_keys_and_random_fastest():
    model = untrained(DESK)
    t = benchmark_timing(model, DESK, trials=3, schemes=(ES, LSTM, RANDOM))
    assert set(t) == {ES, LSTM, RANDOM}
    assert t[RANDOM] < min(t[ES], t[LSTM])


def test_robustness_zero_perturbation_matches_base():
    model = untrained(DESK)
    res = robustness_study(model, DESK, perturb_frac=0.0, trials=20, seed=2)
    base = res["unperturbed"][LSTM]
    assert all(c[LSTM] == pytest.approx(base, abs=1e-9) for c in res["cases"].values())
    assert res["worst_ratio"] == pytest.approx(1.0)
    assert len(res["cases"]) == 8


@pytest.fixture
def report():
    return run_power_sweep(None, DESK, (ES, RANDOM), trials=4, seed=9, powers=(20, 40, 60))


def test_csv_layout(report, tmp_path):
    text = report_csv(report)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) - 1 == 3 * 2
    export_report(report, tmp_path / "a.csv", "csv")
    export_report(report, tmp_path / "b.csv", "csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_json_round_trip(report, tmp_path):
    attach_timing(report, {ES: 1.5, RANDOM: 0.01})
    p = export_report(report, tmp_path / "r.json")
    back = load_report(p)
    assert back == report
    again = export_report(back, tmp_path / "s.json")
    assert p.read_bytes() == again.read_bytes()
    assert back.row(40, ES).ms_median == 1.5
    with pytest.raises(ValueError):
        export_report(report, tmp_path / "x", "xml")
    assert isinstance(EvalReport.from_dict(report.to_dict()), EvalReport)
