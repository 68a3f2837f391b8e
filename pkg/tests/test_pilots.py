import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rislstm import rng as rngs
from rislstm.codebook import build_codebook
from rislstm.pilots import (
    KRON_EVEN,
    RAW,
    feature_dim,
    generate_pilots,
    preprocess_features,
    reference_state,
    uplink_receive,
)
from rislstm.sysmodel import ChannelPair, SystemConfig, effective_channel, ris_config_from_phases, sample_channels

CFG = SystemConfig()


def test_pilot_covariance_monte_carlo():
    cfg = SystemConfig(pilot_len=100_000)
    p_ul = 3.0
    x = generate_pilots(cfg, p_ul, rngs.stream(0, rngs.PILOT))
    cov = x @ x.conj().T / x.shape[1]
    target = p_ul / cfg.n_rx
    # per-entry energy |x|^2 has variance E|x|^4 - (E|x|^2)^2; 16-QAM: E|x|^4 = 13.2 * (scale^2)^2
    scale2 = p_ul / (10 * cfg.n_rx)
    sd_diag = math.sqrt((132 * scale2**2 - target**2) / x.shape[1])
    assert np.all(np.abs(np.diag(cov).real - target) < 5 * sd_diag)
    sd_off = target / math.sqrt(x.shape[1])
    assert abs(cov[0, 1]) < 5 * sd_off * math.sqrt(2)


def test_pilot_entries_on_qam_rings_and_reproducible():
    x = generate_pilots(CFG, 2.0, rngs.stream(1, rngs.PILOT))
    scale = math.sqrt(2.0 / (10 * CFG.n_rx))
    rings = np.array([math.sqrt(2), math.sqrt(10), math.sqrt(18)]) * scale
    mags = np.abs(x).ravel()
    assert np.all(np.min(np.abs(mags[:, None] - rings[None]), axis=1) < 1e-12)
    y = generate_pilots(CFG, 2.0, rngs.stream(1, rngs.PILOT))
    assert x.tobytes() == y.tobytes()


def test_noiseless_uplink_is_adjoint_product():
    ch = sample_channels(CFG, rngs.stream(0, rngs.CHANNEL))
    ref = reference_state(CFG)
    x = generate_pilots(CFG, 1.0, rngs.stream(0, rngs.PILOT))
    r = uplink_receive(ch, ref, x, 0.0, rngs.stream(0, rngs.NOISE))
    expect = effective_channel(ch, ref).conj().T @ x
    assert np.max(np.abs(r - expect)) <= 1e-12 * np.max(np.abs(expect))

    eye = np.zeros((CFG.n_rx, CFG.pilot_len), complex)
    eye[:, : CFG.n_rx] = np.eye(CFG.n_rx)
    r = uplink_receive(ch, ref, eye, 0.0, rngs.stream(0, rngs.NOISE))
    np.testing.assert_allclose(r[:, : CFG.n_rx], effective_channel(ch, ref).conj().T, rtol=1e-12)

    r2 = uplink_receive(ch, ref, math.sqrt(2) * x, 0.0, rngs.stream(0, rngs.NOISE))
    np.testing.assert_allclose(r2, math.sqrt(2) * uplink_receive(ch, ref, x, 0.0, rngs.stream(0, rngs.NOISE)))


def test_zero_channel_gives_noise_only():
    ch = ChannelPair(np.zeros((64, 10), complex), np.zeros((2, 64), complex), 1.0, 1.0)
    x = generate_pilots(CFG, 1.0, rngs.stream(0, rngs.PILOT))
    r = uplink_receive(ch, reference_state(CFG), x, 1e-11, rngs.stream(4, rngs.NOISE))
    rng = rngs.stream(4, rngs.NOISE)
    shape = (10, CFG.pilot_len)
    w = math.sqrt(1e-11 / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    np.testing.assert_array_equal(r, w)


def test_uplink_dimension_check():
    ch = sample_channels(CFG, rngs.stream(0, rngs.CHANNEL))
    with pytest.raises(ValueError):
        uplink_receive(ch, reference_state(CFG), np.ones((3, 4)), 0.0, rngs.stream(0, rngs.NOISE))


def test_feature_dimensions():
    assert feature_dim(10, 64, KRON_EVEN) == 640
    assert feature_dim(4, 16, RAW) == 8
    r = np.ones((10, 16), complex)
    assert preprocess_features(r, reference_state(CFG), KRON_EVEN).shape == (16, 640)
    with pytest.raises(ValueError):
        preprocess_features(r, reference_state(CFG), "bogus")


@given(st.integers(1, 12), st.integers(1, 33), st.integers(1, 5))
def test_feature_dim_formula(n_tx, n_ris, k):
    rng = np.random.default_rng(n_tx * 100 + n_ris)
    r = rng.standard_normal((n_tx, k)) + 1j * rng.standard_normal((n_tx, k))
    ref = type(reference_state(CFG))(np.zeros(n_ris), np.ones(n_ris), np.exp(1j * rng.uniform(size=n_ris)))
    for mode in (KRON_EVEN, RAW):
        f = preprocess_features(r, ref, mode)
        assert f.shape == (k, feature_dim(n_tx, n_ris, mode))
        assert np.all(np.isfinite(f))


def test_kron_even_with_ones_repeats_raw_features():
    cfg = SystemConfig(n_tx=4, n_h=2, n_v=3)
    rng = np.random.default_rng(0)
    r = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    ones = ris_config_from_phases(np.zeros(6), cfg, ideal=True)
    kron = preprocess_features(r, ones, KRON_EVEN)
    raw = preprocess_features(r, ones, RAW)
    # each antenna value is repeated ceil(N/2) = 3 times, real block then imaginary block
    np.testing.assert_array_equal(kron[:, :12], np.repeat(raw[:, :4], 3, axis=1))
    np.testing.assert_array_equal(kron[:, 12:], np.repeat(raw[:, 4:], 3, axis=1))


def test_features_independent_of_candidate_codebook():
    from rislstm.dataset import make_generator

    ch = sample_channels(CFG, rngs.stream(0, rngs.CHANNEL))
    a = make_generator(CFG, 3, codebook_kind="practical").features(0, ch)
    b = make_generator(CFG, 3, codebook_kind="ideal").features(0, ch)
    assert a.tobytes() == b.tobytes()
    assert build_codebook(CFG).size == 64


def test_random_reference_state_is_seeded():
    a = reference_state(CFG, rngs.stream(1, rngs.REFERENCE))
    b = reference_state(CFG, rngs.stream(1, rngs.REFERENCE))
    assert a.response.tobytes() == b.response.tobytes()
    assert np.all(np.abs(a.phases) <= math.pi)
