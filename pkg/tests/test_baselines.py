import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rislstm import rng as rngs
from rislstm.baselines import (
    alternating_optimization,
    exhaustive_search,
    near_optimal_label_set,
    random_selection,
)
from rislstm.codebook import Codebook, build_codebook
from rislstm.sysmodel import SystemConfig, amplitude_model, dbm_to_watts, sample_channels

CFG = SystemConfig()
P40 = dbm_to_watts(40)


def oracle_rate(ch, word, p, noise):
    """Rebuild H_eff with an explicit diagonal matrix and use the log-det form."""
    h = ch.h_r_herm @ np.diag(word) @ ch.h_t
    u, s, vh = np.linalg.svd(h)
    ns = int(np.sum(s > 1e-8 * s[0]))
    f = vh[:ns].conj().T
    m = np.eye(ns) + p / (noise * ns) * (f.conj().T @ h.conj().T @ h @ f)
    return math.log2(np.linalg.det(m).real)


def test_single_word_codebook():
    ch = sample_channels(CFG, rngs.stream(0, rngs.CHANNEL))
    cb = build_codebook(CFG)
    one = Codebook(words=cb.words[:1], kind=cb.kind, n_h=1, n_v=1)
    out = exhaustive_search(ch, one, P40, CFG.noise_watts)
    assert out.best_index == 0 and out.label_set.tolist() == [True]


def test_es_matches_bruteforce_oracle_small_ris():
    cfg = SystemConfig(n_h=2, n_v=2)
    cb = build_codebook(cfg)
    for seed in range(5):
        ch = sample_channels(cfg, rngs.stream(seed, rngs.CHANNEL))
        out = exhaustive_search(ch, cb, P40, cfg.noise_watts)
        oracle = [oracle_rate(ch, w, P40, cfg.noise_watts) for w in cb.words]
        np.testing.assert_allclose(out.rates, oracle, rtol=1e-9)
        assert out.best_index == int(np.argmax(oracle))


def test_es_best_dominates_and_labels_contain_best():
    cb = build_codebook(CFG)
    for seed in range(10):
        out = exhaustive_search(sample_channels(CFG, rngs.stream(seed, rngs.CHANNEL)), cb, P40, CFG.noise_watts)
        assert np.all(out.best_rate >= out.rates)
        assert out.label_set[out.best_index]
        assert np.all(out.rates[out.label_set] >= out.best_rate * 10**-0.05)


def test_es_empty_codebook():
    cb = Codebook(words=np.zeros((0, 64), complex), kind="practical", n_h=0, n_v=0)
    with pytest.raises(ValueError):
        exhaustive_search(sample_channels(CFG, rngs.stream(0, rngs.CHANNEL)), cb, P40, CFG.noise_watts)


def test_near_optimal_examples():
    assert near_optimal_label_set([1.0, 0.9, 0.88]).tolist() == [True, True, False]
    assert near_optimal_label_set([0.2, 0.5, 0.5, 0.1], delta_db=0).tolist() == [False, True, True, False]
    assert near_optimal_label_set([3.0] * 5).all()
    with pytest.raises(ValueError):
        near_optimal_label_set([])


@given(st.lists(st.floats(0, 50), min_size=1, max_size=30), st.floats(0, 3), st.floats(0, 3))
def test_label_set_monotone_in_delta(rates, d1, d2):
    small, big = sorted((d1, d2))
    a, b = near_optimal_label_set(rates, small), near_optimal_label_set(rates, big)
    assert a[int(np.argmax(rates))]
    assert not np.any(a & ~b)


def test_ao_zero_sweeps_returns_initial_rate():
    ch = sample_channels(CFG, rngs.stream(1, rngs.CHANNEL))
    ris, rate = alternating_optimization(ch, CFG, P40, max_sweeps=0)
    np.testing.assert_array_equal(ris.phases, np.zeros(64))
    assert rate == pytest.approx(oracle_rate(ch, ris.response, P40, CFG.noise_watts), rel=1e-9)


def test_ao_non_decreasing_and_consistent():
    ch = sample_channels(CFG, rngs.stream(2, rngs.CHANNEL))
    _, r0 = alternating_optimization(ch, CFG, P40, max_sweeps=0)
    hist = []
    ris, rate = alternating_optimization(ch, CFG, P40, history=hist)
    assert rate >= r0
    assert all(b >= a for a, b in zip(hist, hist[1:]))
    assert len(hist) <= 30
    np.testing.assert_allclose(ris.amplitudes, amplitude_model(ris.phases, CFG))
    assert rate == pytest.approx(oracle_rate(ch, ris.response, P40, CFG.noise_watts), rel=1e-9)


def test_ao_rejects_tiny_grid():
    with pytest.raises(ValueError):
        alternating_optimization(sample_channels(CFG, rngs.stream(0, rngs.CHANNEL)), CFG, P40, phase_grid=1)


@pytest.mark.slow
def test_ao_close_to_full_grid_search_small_ris():
    cfg = SystemConfig(n_h=2, n_v=2)
    grid = -math.pi + 2 * math.pi * np.arange(4) / 4
    resp = amplitude_model(grid, cfg) * np.exp(1j * grid)
    combos = np.array(list(itertools.product(range(4), repeat=4)))
    hits = 0
    for t in range(100):
        ch = sample_channels(cfg, rngs.stream(t, "ao-bruteforce"))
        best = max(oracle_rate(ch, resp[c], P40, cfg.noise_watts) for c in combos)
        _, rate = alternating_optimization(ch, cfg, P40, phase_grid=4)
        hits += rate >= 0.9 * best
    assert hits >= 90


def test_random_selection():
    cb = build_codebook(CFG)
    one = Codebook(words=cb.words[:1], kind=cb.kind, n_h=1, n_v=1)
    assert random_selection(one, np.random.default_rng(0)) == 0
    a = [random_selection(cb, r) for r in [rngs.stream(5, rngs.EVAL)] for _ in range(20)]
    b = [random_selection(cb, r) for r in [rngs.stream(5, rngs.EVAL)] for _ in range(20)]
    assert a == b


def test_random_selection_uniform():
    cb = build_codebook(CFG)
    rng = rngs.stream(9, rngs.EVAL)
    n = 100_000
    counts = np.bincount([random_selection(cb, rng) for _ in range(n)], minlength=64)
    p = 1 / 64
    sigma = math.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) < 5 * sigma)
