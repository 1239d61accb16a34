"""End-to-end acceptance gate.

Each test covers one numbered release criterion at its stated tolerance and
prints one pass line when it holds (run with ``pytest -v -s`` to see them;
any failure shows up as a normal pytest failure).
"""

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from uwbranging import (
    ImpulseResponse,
    RangingModel,
    build_diagnostics,
    compute_pdp,
    estimate_noise_stats,
    extract_features,
    sweep_thresholds,
)
from uwbranging.cli import EXIT_OK, main
from uwbranging.ranging import features_from_table_row
from uwbranging.synth import default_tunnel_profile
from uwbranging.threshold import noise_estimation_subset


def report(n: int, message: str) -> None:
    print(f"PASS criterion {n}: {message}")


def test_criterion_1_fit_round_trip(default_run):
    model = default_run.model
    table = default_run.table
    assert len(default_run.records) == 3600
    assert sum(1 for s in table.scenarios if s != "NLOS-W") == 2700
    assert sum(1 for s in table.scenarios if s == "NLOS-W") == 900

    assert model.rate_los_per_ns == pytest.approx(0.333, rel=0.10)
    assert model.rate_nlos_per_ns == pytest.approx(0.075, rel=0.10)
    assert model.sigma_los_m == pytest.approx(0.16, rel=0.10)
    assert model.sigma_nlos_m == pytest.approx(1.61, rel=0.15)

    grid = np.arange(20.0, 120.0 + 1e-9, 0.5)
    gap = np.abs(model.nlos_error_m(grid) - default_run.profile.nlos_bias.curve_m(grid))
    assert gap.max() <= 0.3

    assert default_run.elapsed_s <= 30.0
    report(
        1,
        "fit round-trip recovered rates "
        f"({model.rate_los_per_ns:.4f}, {model.rate_nlos_per_ns:.5f}) /ns, sigmas "
        f"({model.sigma_los_m:.4f}, {model.sigma_nlos_m:.4f}) m, "
        f"max curve gap {gap.max():.3f} m in {default_run.elapsed_s:.1f} s",
    )


def test_criterion_2_mitigation_efficacy(default_run):
    table = default_run.table
    nlos = table.nlos_mask()
    errors = table.ranging_error_m()[nlos]
    corrected = errors - np.asarray(
        default_run.model.nlos_error_m(table.column("max_excess_ns")[nlos])
    )
    ratio = corrected.std(ddof=1) / errors.std(ddof=1)
    assert ratio <= 0.6
    assert abs(corrected.mean()) <= 0.15
    report(
        2,
        f"mitigation shrank the error spread by x{ratio:.2f} "
        f"(mean residual {corrected.mean():+.3f} m)",
    )


def test_criterion_3_posterior_hand_checks():
    model = RangingModel(
        los_bias_m=-0.27,
        sigma_los_m=0.16,
        sigma_nlos_m=1.61,
        poly=(0.00087, -0.2, 11.72),
        rate_los_per_ns=0.333,
        rate_nlos_per_ns=0.075,
        prior_nlos=0.5,
    )
    p20 = float(model.posterior_nlos(20.0))
    p2 = float(model.posterior_nlos(2.0))
    assert p20 == pytest.approx(0.9751, abs=1e-4)
    assert p2 == pytest.approx(0.2739, abs=1e-4)
    report(3, f"posterior(20 ns) = {p20:.5f}, posterior(2 ns) = {p2:.5f}")


def test_criterion_4_polynomial_evaluation():
    model = RangingModel(
        los_bias_m=-0.27,
        sigma_los_m=0.16,
        sigma_nlos_m=1.61,
        poly=(0.00087, -0.2, 11.72),
        rate_los_per_ns=0.333,
        rate_nlos_per_ns=0.075,
        prior_nlos=0.5,
    )
    assert model.nlos_error_m(60.0) == pytest.approx(2.852, abs=1e-9)
    assert model.nlos_error_m(0.0) == pytest.approx(11.72, abs=1e-9)
    report(4, "error curve evaluates to 2.852 m at 60 ns and 11.72 m at 0 ns")


def _literal_features(power_mw, mask, magnitude, dt):
    n = len(power_mw)
    span = n * dt
    p_thr = [p if m else 0.0 for p, m in zip(power_mw, mask)]
    detected = [i for i, m in enumerate(mask) if m]
    toa = detected[0] * dt
    total = sum(p_thr)
    mean_excess = sum(i * dt * p for i, p in enumerate(p_thr)) / total
    peak = max(range(n), key=lambda i: (p_thr[i], -i))
    mu = sum(magnitude) / n
    m2 = sum((x - mu) ** 2 for x in magnitude) / n
    m4 = sum((x - mu) ** 4 for x in magnitude) / n
    return np.array(
        [
            toa * 1e9,
            10 * math.log10(sum(p * dt for p in p_thr) / span),
            10 * math.log10(max(p_thr)),
            mean_excess * 1e9,
            (detected[-1] * dt - toa) * 1e9,
            math.sqrt(
                sum((i * dt - mean_excess) ** 2 * p for i, p in enumerate(p_thr)) / total
            )
            * 1e9,
            (peak * dt - toa) * 1e9,
            m4 / (m2 * m2),
        ]
    )


def test_criterion_5_feature_oracle_equivalence():
    rng = np.random.default_rng(777)
    dt = 0.5e-9
    checked = 0
    for _ in range(100):
        taps = (rng.normal(size=64) + 1j * rng.normal(size=64)) * rng.uniform(0.1, 2.0)
        cir = ImpulseResponse(taps, dt)
        pdp = compute_pdp(cir, rng.uniform(-40.0, -5.0))
        if not pdp.mask.any():
            continue
        feats = extract_features(pdp, cir).as_vector()
        oracle = _literal_features(
            pdp.power_mw.tolist(), pdp.mask.tolist(), np.abs(taps).tolist(), dt
        )
        np.testing.assert_allclose(feats, oracle, rtol=1e-9, atol=1e-12)
        checked += 1
    assert checked >= 90

    one = np.zeros(100)
    one[60] = 1.0
    cir = ImpulseResponse(np.sqrt(one).astype(complex), dt)
    feats = extract_features(compute_pdp(cir, -43.8), cir)
    assert feats.toa_s == dt * 60  # 30 ns on the binary-float grid
    assert feats.mean_excess_delay_s == dt * 60
    assert feats.max_excess_delay_ns == 0.0
    assert feats.rms_delay_spread_ns == 0.0
    assert feats.rise_time_ns == 0.0
    assert feats.pmax_dbm == 0.0

    two = np.zeros(100)
    two[0] = two[20] = 1.0
    cir = ImpulseResponse(np.sqrt(two).astype(complex), dt)
    feats = extract_features(compute_pdp(cir, -43.8), cir)
    mid = dt * 20 / 2  # 5 ns
    assert feats.mean_excess_delay_s == mid
    assert feats.rms_delay_spread_s == math.sqrt((mid**2 + (dt * 20 - mid) ** 2) / 2)
    assert feats.max_excess_delay_s == dt * 20
    report(5, f"{checked} random profiles match the direct-summation oracle at 1e-9")


def test_criterion_6_threshold_tuner(default_run):
    candidates = -60.0 + 0.5 * np.arange(61)
    curve = sweep_thresholds(default_run.records, candidates)
    assert np.all(np.diff(curve.fa_rate) <= 0)
    assert np.all(np.diff(curve.md_rate) >= 0)
    assert -50.0 <= curve.selected_dbm <= -40.0
    stats = estimate_noise_stats(noise_estimation_subset(default_run.records))
    k = stats.sigma_multiple(curve.selected_dbm)
    assert 2.5 <= k <= 4.5
    report(
        6,
        f"selected threshold {curve.selected_dbm:.1f} dBm sits "
        f"{k:.2f} noise sigmas above the {stats.mean_dbm:.1f} dBm floor",
    )


def test_criterion_7_diagnostics_sanity(default_run):
    diag = build_diagnostics(default_run.table)
    rho_toa = diag.value("toa_ns", "corr_distance")
    rho_mit = diag.value("max_excess_ns", "corr_nlos_error")
    xi_rise = diag.value("rise_ns", "overlap")
    xi_rms = diag.value("rms_ns", "overlap")
    assert rho_toa > 0.9
    assert rho_mit < -0.5
    assert xi_rise < xi_rms
    report(
        7,
        f"corr(arrival, distance) = {rho_toa:.3f}, corr(max excess, error) = {rho_mit:.3f}, "
        f"rise overlap {xi_rise:.2f} < spread overlap {xi_rms:.2f}",
    )


def test_criterion_8_mixture_likelihood(default_run):
    model = default_run.model
    feats = features_from_table_row(default_run.table, 0)
    mixture = model.range_likelihood(feats)
    assert abs(sum(mixture.weights) - 1.0) <= 1e-12
    total, _ = quad(lambda d: float(mixture.density(d)), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-6)

    pure = RangingModel(
        los_bias_m=model.los_bias_m,
        sigma_los_m=model.sigma_los_m,
        sigma_nlos_m=model.sigma_nlos_m,
        poly=model.poly,
        rate_los_per_ns=model.rate_los_per_ns,
        rate_nlos_per_ns=model.rate_nlos_per_ns,
        prior_nlos=0.0,
    )
    mixture = pure.range_likelihood(feats)
    peak = float(mixture.density(mixture.means_m[0]))
    assert peak == pytest.approx(1.0 / (model.sigma_los_m * math.sqrt(2 * math.pi)), abs=1e-6)
    report(
        8,
        f"weights sum to one, density integrates to {total:.8f}, "
        f"pure-LOS peak {peak:.4f} 1/m",
    )


def _tree_digest(root: Path) -> dict:
    digest = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return digest


def test_criterion_9_run_all_determinism(tmp_path):
    payload = default_tunnel_profile().to_dict()
    payload["tx_positions_m"] = [[0.0, 0.4], [12.0, 0.4]]
    payload["rx_positions_m"] = [[2.0 + 3.0 * i, 2.2] for i in range(8)]
    payload["repetitions"] = {"LOS": 3, "NLOS-M": 1, "NLOS-P": 1, "NLOS-W": 3}
    profile_path = tmp_path / "profile.json"
    profile_path.write_text(json.dumps(payload))
    camp = tmp_path / "camp"
    assert main(["simulate", "--profile", str(profile_path), "--out-dir", str(camp)]) == EXIT_OK

    out_a = tmp_path / "run_a"
    out_b = tmp_path / "run_b"
    for out in (out_a, out_b):
        code = main(["run-all", "--manifest", str(camp / "manifest.jsonl"),
                     "--out-dir", str(out)])
        assert code == EXIT_OK
    digest_a = _tree_digest(out_a)
    digest_b = _tree_digest(out_b)
    assert digest_a == digest_b
    assert len(digest_a) >= 20
    report(9, f"two identical runs produced byte-identical trees ({len(digest_a)} artifacts)")
