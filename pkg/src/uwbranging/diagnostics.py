"""Feature diagnostics over a labeled table: class overlap and correlations.

These metrics rank the channel parameters for two distinct jobs: identifying
an obstructed link (small class overlap, low correlation with distance) and
regressing the obstruction-induced ranging error (high correlation with the
error on obstructed records).  Sample statistics use the n-1 normalization
throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    InsufficientDataError,
    InvalidInputError,
    UndefinedCorrelationError,
    UndefinedOverlapError,
)
from .features import FEATURE_COLUMNS, FeatureTable
from .validation import as_float_vector


def overlap_metric(los_samples, nlos_samples) -> float:
    """Geometric-mean spread over mean separation: sqrt(s_L*s_N)/|m_N - m_L|.

    Small values mean the two class distributions separate cleanly.
    """
    los = as_float_vector(los_samples, "los_samples", min_size=0)
    nlos = as_float_vector(nlos_samples, "nlos_samples", min_size=0)
    if los.size < 2 or nlos.size < 2:
        raise InsufficientDataError("both classes need at least 2 samples")
    gap = abs(float(nlos.mean()) - float(los.mean()))
    if gap == 0.0:
        raise UndefinedOverlapError("class means coincide; overlap metric undefined")
    return float(np.sqrt(los.std(ddof=1) * nlos.std(ddof=1)) / gap)


def correlation(x, y) -> float:
    """Pearson sample correlation of two equally long sequences."""
    xv = as_float_vector(x, "x", min_size=2)
    yv = as_float_vector(y, "y", min_size=2)
    if xv.size != yv.size:
        raise InvalidInputError(f"length mismatch: {xv.size} vs {yv.size}")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    sx = float(np.sqrt((xc**2).sum()))
    sy = float(np.sqrt((yc**2).sum()))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("zero variance; correlation undefined")
    rho = float((xc * yc).sum() / (sx * sy))
    return min(1.0, max(-1.0, rho))  # rounding can push exact affinity past 1


@dataclass
class FeatureDiagnostics:
    """Per-feature overlap and correlation diagnostics.

    Entries that are undefined (zero-variance feature, coincident class
    means) hold NaN, and the offending (feature, metric) pairs are listed in
    ``undefined``.
    """

    feature_names: tuple[str, ...]
    overlap: np.ndarray
    corr_distance: np.ndarray
    corr_nlos_error: np.ndarray
    corr_pairs: np.ndarray
    n_los: int
    n_nlos: int
    undefined: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        k = len(self.feature_names)
        for name in ("overlap", "corr_distance", "corr_nlos_error"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (k,):
                raise InvalidInputError(f"{name} must have shape ({k},)")
            setattr(self, name, arr)
        pairs = np.asarray(self.corr_pairs, dtype=np.float64)
        if pairs.shape != (k, k):
            raise InvalidInputError(f"corr_pairs must be ({k}, {k})")
        finite = np.isfinite(pairs)
        if not np.allclose(pairs[finite & finite.T], pairs.T[finite & finite.T], atol=1e-12):
            raise InvalidInputError("pairwise correlation matrix must be symmetric")
        self.corr_pairs = pairs
        for name in ("corr_distance", "corr_nlos_error"):
            arr = getattr(self, name)
            ok = np.isfinite(arr)
            if np.any(np.abs(arr[ok]) > 1.0 + 1e-12):
                raise InvalidInputError(f"{name} entries must lie in [-1, 1]")
        ok = np.isfinite(self.overlap)
        if np.any(self.overlap[ok] < 0.0):
            raise InvalidInputError("overlap entries must be non-negative")

    def value(self, feature: str, metric: str) -> float:
        i = self.feature_names.index(feature)
        return float(getattr(self, metric)[i])


def _safe(func, *args, on_undefined=np.nan):
    try:
        return func(*args), True
    except (UndefinedOverlapError, UndefinedCorrelationError):
        return on_undefined, False


def build_diagnostics(table: FeatureTable, nlos_errors_m=None) -> FeatureDiagnostics:
    """Compute overlap and correlation diagnostics from a labeled feature table.

    Class conditioning: overlap splits samples across the two pooled classes;
    correlation with distance and the pairwise matrix use all labeled rows;
    correlation with the ranging error uses the NLOS rows only.
    ``nlos_errors_m`` defaults to ``c*toa - distance`` on those rows.
    """
    labeled = table.labeled_mask()
    if not labeled.any():
        raise InsufficientDataError("feature table has no labeled rows")
    nlos = table.nlos_mask() & labeled
    los = labeled & ~nlos
    if not los.any() or not nlos.any():
        raise InsufficientDataError("both classes must be present in the table")

    if nlos_errors_m is None:
        errors = table.ranging_error_m()[nlos]
    else:
        errors = as_float_vector(nlos_errors_m, "nlos_errors_m")
        if errors.size != int(nlos.sum()):
            raise InvalidInputError(
                f"nlos_errors_m has {errors.size} entries for {int(nlos.sum())} NLOS rows"
            )

    names = FEATURE_COLUMNS
    k = len(names)
    overlap = np.full(k, np.nan)
    corr_d = np.full(k, np.nan)
    corr_err = np.full(k, np.nan)
    pairs = np.full((k, k), np.nan)
    undefined: list[tuple[str, str]] = []

    distance = table.true_distance_m
    for i, name in enumerate(names):
        col = table.column(name)
        overlap[i], ok = _safe(overlap_metric, col[los], col[nlos])
        if not ok:
            undefined.append((name, "overlap"))
        corr_d[i], ok = _safe(correlation, col[labeled], distance[labeled])
        if not ok:
            undefined.append((name, "corr_distance"))
        corr_err[i], ok = _safe(correlation, col[nlos], errors)
        if not ok:
            undefined.append((name, "corr_nlos_error"))
        for j in range(i, k):
            if i == j:
                pairs[i, j] = 1.0
                continue
            value, ok = _safe(correlation, col[labeled], table.column(names[j])[labeled])
            pairs[i, j] = pairs[j, i] = value
            if not ok:
                undefined.append((f"{name}/{names[j]}", "corr_pairs"))

    return FeatureDiagnostics(
        feature_names=names,
        overlap=overlap,
        corr_distance=corr_d,
        corr_nlos_error=corr_err,
        corr_pairs=pairs,
        n_los=int(los.sum()),
        n_nlos=int(nlos.sum()),
        undefined=undefined,
    )
