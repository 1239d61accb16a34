import math

import numpy as np
import pytest

from uwbranging import FeatureTable, build_diagnostics, correlation, overlap_metric
from uwbranging.exceptions import (
    InsufficientDataError,
    InvalidInputError,
    UndefinedCorrelationError,
    UndefinedOverlapError,
)
from uwbranging.features import FEATURE_COLUMNS


def test_overlap_zero_variance_classes():
    assert overlap_metric([1.0, 1.0, 1.0], [3.0, 3.0]) == 0.0


def test_overlap_hand_constructed_unit_value():
    r = math.sqrt(0.5)
    los = [-r, r]  # mean 0, sample std 1
    nlos = [2 - math.sqrt(8), 2 + math.sqrt(8)]  # mean 2, sample std 4
    assert overlap_metric(los, nlos) == pytest.approx(1.0, rel=1e-12)


def test_overlap_requires_distinct_means_and_enough_samples():
    with pytest.raises(UndefinedOverlapError):
        overlap_metric([1.0, 2.0], [2.0, 1.0])
    with pytest.raises(InsufficientDataError):
        overlap_metric([1.0], [2.0, 3.0])


def test_correlation_affine_and_inverse():
    x = np.arange(10.0)
    assert correlation(x, 2 * x + 3) == pytest.approx(1.0)
    assert correlation(x, -x) == pytest.approx(-1.0)


def test_correlation_of_independent_sequences_is_small_and_matches_formula():
    rng = np.random.default_rng(77)
    x = rng.normal(size=10_000)
    y = rng.normal(size=10_000)
    rho = correlation(x, y)
    assert abs(rho) < 0.05
    # direct-formula evaluation
    xc, yc = x - x.mean(), y - y.mean()
    direct = float((xc * yc).sum() / np.sqrt((xc**2).sum() * (yc**2).sum()))
    assert rho == pytest.approx(direct, rel=1e-12)


def test_correlation_errors():
    with pytest.raises(UndefinedCorrelationError):
        correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(InvalidInputError):
        correlation([1.0, 2.0], [1.0, 2.0, 3.0])


def make_table(matrix, scenarios, distances):
    n = len(scenarios)
    return FeatureTable(
        record_ids=[f"r{i}" for i in range(n)],
        scenarios=scenarios,
        true_distance_m=np.asarray(distances, dtype=float),
        matrix=np.asarray(matrix, dtype=float),
    )


def random_table(rng, n_los=40, n_nlos=25):
    n = n_los + n_nlos
    matrix = rng.normal(size=(n, len(FEATURE_COLUMNS)))
    matrix[:, 0] = rng.uniform(10, 100, n)  # arrival times
    scenarios = ["LOS"] * n_los + ["NLOS-W"] * n_nlos
    distances = 0.3 * matrix[:, 0] - rng.normal(1.0, 0.5, n)
    return make_table(matrix, scenarios, distances)


def test_class_conditioning_matches_bruteforce_recomputation():
    rng = np.random.default_rng(31)
    table = random_table(rng)
    diag = build_diagnostics(table)
    nlos_rows = table.nlos_mask()
    errors = table.ranging_error_m()[nlos_rows]
    for i, name in enumerate(FEATURE_COLUMNS):
        col = table.column(name)[nlos_rows]
        assert diag.corr_nlos_error[i] == pytest.approx(correlation(col, errors), rel=1e-12)
        assert diag.corr_distance[i] == pytest.approx(
            correlation(table.column(name), table.true_distance_m), rel=1e-12
        )


def test_affine_rescaling_leaves_metrics_unchanged():
    rng = np.random.default_rng(32)
    table = random_table(rng)
    diag = build_diagnostics(table)
    col = FEATURE_COLUMNS.index("rms_ns")
    rescaled = table.matrix.copy()
    rescaled[:, col] = 4.0 * rescaled[:, col] + 7.0
    diag2 = build_diagnostics(
        make_table(rescaled, table.scenarios, table.true_distance_m)
    )
    assert diag2.overlap[col] == pytest.approx(diag.overlap[col], abs=1e-12)
    assert abs(diag2.corr_distance[col]) == pytest.approx(
        abs(diag.corr_distance[col]), abs=1e-12
    )
    assert abs(diag2.corr_nlos_error[col]) == pytest.approx(
        abs(diag.corr_nlos_error[col]), abs=1e-12
    )
    for j in range(len(FEATURE_COLUMNS)):
        if j == col:
            continue
        assert abs(diag2.corr_pairs[col, j]) == pytest.approx(
            abs(diag.corr_pairs[col, j]), abs=1e-12
        )


def test_constant_feature_is_flagged_but_isolated():
    rng = np.random.default_rng(33)
    table = random_table(rng)
    matrix = table.matrix.copy()
    kurt = FEATURE_COLUMNS.index("kurtosis")
    matrix[:, kurt] = 2.5
    diag = build_diagnostics(make_table(matrix, table.scenarios, table.true_distance_m))
    assert math.isnan(diag.corr_distance[kurt])
    assert ("kurtosis", "corr_distance") in diag.undefined
    toa = FEATURE_COLUMNS.index("toa_ns")
    assert math.isfinite(diag.corr_distance[toa])
    assert diag.corr_pairs[kurt, kurt] == 1.0


def test_diagnostics_shapes_and_symmetry():
    rng = np.random.default_rng(34)
    diag = build_diagnostics(random_table(rng))
    k = len(FEATURE_COLUMNS)
    assert diag.overlap.shape == (k,)
    assert diag.corr_distance.shape == (k,)
    assert diag.corr_nlos_error.shape == (k,)
    assert diag.corr_pairs.shape == (k, k)
    assert np.allclose(diag.corr_pairs, diag.corr_pairs.T, equal_nan=True)
    assert np.all(np.diag(diag.corr_pairs) == 1.0)
    finite = np.isfinite(diag.corr_pairs)
    assert np.all(np.abs(diag.corr_pairs[finite]) <= 1.0 + 1e-12)


def test_single_class_table_is_insufficient():
    rng = np.random.default_rng(35)
    table = random_table(rng, n_los=30, n_nlos=0)
    with pytest.raises(InsufficientDataError):
        build_diagnostics(table)


def test_explicit_error_vector_must_align():
    rng = np.random.default_rng(36)
    table = random_table(rng)
    with pytest.raises(InvalidInputError):
        build_diagnostics(table, nlos_errors_m=np.ones(3))
