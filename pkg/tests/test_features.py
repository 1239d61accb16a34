import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from uwbranging import (
    ChannelFeatureExtractor,
    ChannelFeatures,
    ImpulseResponse,
    compute_pdp,
    extract_features,
)
from uwbranging.exceptions import DegenerateSignalError, NoSignalDetectedError

DT = 0.5e-9


def cir_from_power_mw(power_mw, dt=DT):
    taps = np.sqrt(np.asarray(power_mw, dtype=float)).astype(complex)
    return ImpulseResponse(taps, dt)


def literal_features(power_mw, mask, magnitude, dt):
    """Direct-summation re-evaluation of every parameter, plain Python."""
    n = len(power_mw)
    span = n * dt
    p_thr = [p if m else 0.0 for p, m in zip(power_mw, mask)]
    detected = [i for i, m in enumerate(mask) if m]
    toa = detected[0] * dt
    max_excess = detected[-1] * dt - toa
    total = sum(p_thr)
    mean_excess = sum(i * dt * p for i, p in enumerate(p_thr)) / total
    rms = math.sqrt(sum((i * dt - mean_excess) ** 2 * p for i, p in enumerate(p_thr)) / total)
    peak_idx = max(range(n), key=lambda i: (p_thr[i], -i))
    rise = peak_idx * dt - toa
    rss = 10 * math.log10(sum(p * dt for p in p_thr) / span)
    pmax = 10 * math.log10(max(p_thr))
    mu = sum(magnitude) / n
    m2 = sum((x - mu) ** 2 for x in magnitude) / n
    m4 = sum((x - mu) ** 4 for x in magnitude) / n
    return ChannelFeatures(
        toa_s=toa,
        rss_dbm=rss,
        pmax_dbm=pmax,
        mean_excess_delay_s=mean_excess,
        max_excess_delay_s=max_excess,
        rms_delay_spread_s=rms,
        rise_time_s=rise,
        kurtosis=m4 / (m2 * m2),
    )


def assert_close(actual: ChannelFeatures, expected: ChannelFeatures, rel=1e-9):
    for a, e in zip(actual.as_vector(), expected.as_vector()):
        assert a == pytest.approx(e, rel=rel, abs=1e-12)


def test_single_tap_collapses_spreads():
    power = np.zeros(200)
    power[60] = 1.0  # 1 mW at 30 ns
    feats = extract_features(compute_pdp(cir_from_power_mw(power), -43.8),
                             cir_from_power_mw(power))
    assert feats.toa_ns == pytest.approx(30.0)
    assert feats.mean_excess_delay_ns == pytest.approx(30.0)
    assert feats.max_excess_delay_ns == 0.0
    assert feats.rms_delay_spread_ns == 0.0
    assert feats.rise_time_ns == 0.0
    assert feats.pmax_dbm == pytest.approx(0.0)


def test_two_equal_taps_mean_at_midpoint():
    power = np.zeros(100)
    power[0] = 1.0
    power[20] = 1.0  # 10 ns apart
    feats = extract_features(compute_pdp(cir_from_power_mw(power), -43.8),
                             cir_from_power_mw(power))
    assert feats.toa_ns == 0.0
    assert feats.mean_excess_delay_ns == pytest.approx(5.0)
    assert feats.rms_delay_spread_ns == pytest.approx(5.0)
    assert feats.max_excess_delay_ns == pytest.approx(10.0)


def test_random_pdps_match_literal_summation():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = 50
        taps = rng.normal(size=n) + 1j * rng.normal(size=n)
        taps *= rng.uniform(0.05, 3.0)
        cir = ImpulseResponse(taps, DT)
        threshold = rng.uniform(-45.0, -5.0)
        pdp = compute_pdp(cir, threshold)
        if not pdp.mask.any():
            continue
        feats = extract_features(pdp, cir)
        oracle = literal_features(
            pdp.power_mw.tolist(), pdp.mask.tolist(), np.abs(taps).tolist(), DT
        )
        assert_close(feats, oracle)


def test_delay_shift_moves_arrival_only():
    rng = np.random.default_rng(5)
    power = np.zeros(120)
    power[10:30] = rng.uniform(0.1, 2.0, 20)
    base = extract_features(compute_pdp(cir_from_power_mw(power), -43.8),
                            cir_from_power_mw(power))
    shifted_power = np.roll(power, 25)
    shifted = extract_features(compute_pdp(cir_from_power_mw(shifted_power), -43.8),
                               cir_from_power_mw(shifted_power))
    delta = 25 * DT * 1e9
    assert shifted.toa_ns == pytest.approx(base.toa_ns + delta)
    assert shifted.mean_excess_delay_ns == pytest.approx(base.mean_excess_delay_ns + delta)
    assert shifted.max_excess_delay_ns == pytest.approx(base.max_excess_delay_ns)
    assert shifted.rms_delay_spread_ns == pytest.approx(base.rms_delay_spread_ns)
    assert shifted.rise_time_ns == pytest.approx(base.rise_time_ns)


def test_power_scaling_shifts_levels_not_delays():
    rng = np.random.default_rng(6)
    power = np.zeros(80)
    power[5:40] = rng.uniform(0.5, 4.0, 35)
    scale = 12.5
    low_threshold = -200.0  # keep every sample detected on both sides
    a = extract_features(compute_pdp(cir_from_power_mw(power), low_threshold),
                         cir_from_power_mw(power))
    b = extract_features(compute_pdp(cir_from_power_mw(power * scale), low_threshold),
                         cir_from_power_mw(power * scale))
    shift = 10 * math.log10(scale)
    assert b.rss_dbm == pytest.approx(a.rss_dbm + shift)
    assert b.pmax_dbm == pytest.approx(a.pmax_dbm + shift)
    for name in ("mean_excess_delay_ns", "max_excess_delay_ns",
                 "rms_delay_spread_ns", "rise_time_ns"):
        assert getattr(b, name) == pytest.approx(getattr(a, name))
    assert b.kurtosis == pytest.approx(a.kurtosis)


def half_normal_kurtosis():
    mu = math.sqrt(2 / math.pi)
    e2, e3, e4 = 1.0, 2 * math.sqrt(2 / math.pi), 3.0
    m2 = e2 - mu * mu
    m4 = e4 - 4 * mu * e3 + 6 * mu * mu * e2 - 3 * mu**4
    return m4 / (m2 * m2)


def test_kurtosis_of_gaussian_magnitude_approaches_analytic_value():
    rng = np.random.default_rng(42)
    n = 200_000
    taps = rng.normal(size=n).astype(complex)
    cir = ImpulseResponse(taps, DT)
    pdp = compute_pdp(cir, -200.0)
    feats = extract_features(pdp, cir)
    assert feats.kurtosis == pytest.approx(half_normal_kurtosis(), abs=0.15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 1e3), min_size=3, max_size=60))
def test_kurtosis_at_least_one_and_delays_ordered(powers):
    power = np.asarray(powers)
    if np.ptp(np.sqrt(power)) == 0:
        return
    cir = cir_from_power_mw(power)
    feats = extract_features(compute_pdp(cir, -300.0), cir)
    assert feats.kurtosis >= 1.0 - 1e-12
    assert feats.toa_ns <= feats.mean_excess_delay_ns + 1e-12
    assert feats.mean_excess_delay_ns <= feats.toa_ns + feats.max_excess_delay_ns + 1e-12
    assert feats.rise_time_ns <= feats.max_excess_delay_ns + 1e-12


def test_rise_time_tie_breaks_to_earliest_peak():
    power = np.zeros(50)
    power[4] = 0.5
    power[10] = 2.0
    power[30] = 2.0  # same maximum later
    cir = cir_from_power_mw(power)
    feats = extract_features(compute_pdp(cir, -43.8), cir)
    assert feats.rise_time_ns == pytest.approx((10 - 4) * 0.5)


def test_empty_pdp_is_missed_detection():
    cir = cir_from_power_mw(np.full(10, 1e-9))
    with pytest.raises(NoSignalDetectedError):
        extract_features(compute_pdp(cir, -43.8), cir)


def test_constant_magnitude_record_has_undefined_kurtosis():
    cir = ImpulseResponse(np.ones(16, complex), DT)
    with pytest.raises(DegenerateSignalError):
        extract_features(compute_pdp(cir, -43.8), cir)


def test_kurtosis_flag_switches_to_thresholded_magnitude():
    rng = np.random.default_rng(9)
    taps = rng.normal(size=100) * 1e-3 + 0j
    taps[40] = 1.0
    cir = ImpulseResponse(taps, DT)
    pdp = compute_pdp(cir, -43.8)
    full = extract_features(pdp, cir)
    masked = extract_features(pdp, cir, kurtosis_on_thresholded=True)
    assert full.kurtosis != masked.kurtosis


def test_extractor_transform_matches_single_extraction():
    rng = np.random.default_rng(12)
    cirs = []
    for _ in range(5):
        power = np.zeros(64)
        power[rng.integers(0, 30)] = rng.uniform(0.5, 2.0)
        power[rng.integers(30, 60)] = rng.uniform(0.5, 2.0)
        power += rng.uniform(1e-8, 1e-7, 64)
        cirs.append(cir_from_power_mw(power))
    extractor = ChannelFeatureExtractor(threshold_dbm=-43.8)
    matrix = extractor.fit(cirs).transform(cirs)
    assert matrix.shape == (5, 8)
    for row, cir in zip(matrix, cirs):
        feats = extract_features(compute_pdp(cir, -43.8), cir)
        assert np.allclose(row, feats.as_vector())


def test_extractor_is_cloneable():
    extractor = ChannelFeatureExtractor(threshold_dbm=-40.0)
    copied = clone(extractor)
    assert copied.get_params()["threshold_dbm"] == -40.0
