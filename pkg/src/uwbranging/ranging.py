"""Statistical TOA ranging: bias correction, soft LOS/NLOS posterior, mixtures.

The fitted model holds:

* a line-of-sight range bias (meters) and the residual sigma after removing it,
* a quadratic curve mapping maximum excess delay (ns) to the obstructed-path
  range error (meters), and the residual sigma after removing it,
* one exponential rate per class for the rise-time likelihood (1/ns),
* the prior probability of an obstructed link (a deployment fact, supplied by
  configuration rather than fitted).

All delays entering the model are nanoseconds and ranges are meters, with
c = 0.3 m/ns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DegenerateFitError, InsufficientDataError, InvalidInputError
from .features import (
    COL_MAX_EXCESS_NS,
    COL_RISE_NS,
    COL_TOA_NS,
    FEATURE_COLUMNS,
    ChannelFeatures,
    FeatureTable,
)
from .processing import SPEED_OF_LIGHT_M_PER_NS
from .validation import check_feature_matrix, require

LOS = "LOS"
NLOS = "NLOS"

#: Minimum number of NLOS samples required to fit the quadratic error curve.
MIN_NLOS_SAMPLES = 10


@dataclass(frozen=True)
class RangeLikelihood:
    """Two-component Gaussian mixture over distance (meters)."""

    weights: tuple[float, float]
    means_m: tuple[float, float]
    stds_m: tuple[float, float]

    def __post_init__(self):
        require(abs(sum(self.weights) - 1.0) <= 1e-12, "weights must sum to 1")
        require(all(w >= 0.0 for w in self.weights), "weights must be non-negative")
        require(all(s > 0.0 for s in self.stds_m), "component stds must be positive")
        require(all(math.isfinite(m) for m in self.means_m), "means must be finite")

    def density(self, distance_m) -> np.ndarray:
        """Evaluate the mixture density at the given distances."""
        d = np.asarray(distance_m, dtype=np.float64)
        out = np.zeros_like(d, dtype=np.float64)
        for w, mu, sd in zip(self.weights, self.means_m, self.stds_m):
            out += w * np.exp(-0.5 * ((d - mu) / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
        return out


@dataclass(frozen=True)
class RangingModel:
    """Immutable fitted constants; all inference methods are pure."""

    los_bias_m: float
    sigma_los_m: float
    sigma_nlos_m: float
    poly: tuple[float, float, float]
    rate_los_per_ns: float
    rate_nlos_per_ns: float
    prior_nlos: float

    def __post_init__(self):
        require(self.sigma_los_m > 0, "sigma_los must be positive")
        require(self.sigma_nlos_m > 0, "sigma_nlos must be positive")
        require(self.rate_los_per_ns > 0, "rate_los must be positive")
        require(self.rate_nlos_per_ns > 0, "rate_nlos must be positive")
        require(0.0 <= self.prior_nlos <= 1.0, "prior_nlos must lie in [0, 1]")
        require(len(self.poly) == 3, "poly must hold (p2, p1, p0)")
        require(all(math.isfinite(p) for p in self.poly), "poly coefficients must be finite")
        object.__setattr__(self, "poly", tuple(float(p) for p in self.poly))

    def nlos_error_m(self, max_excess_ns) -> np.ndarray | float:
        """Quadratic range-error curve evaluated at the maximum excess delay."""
        t = np.asarray(max_excess_ns, dtype=np.float64)
        p2, p1, p0 = self.poly
        out = p2 * t * t + p1 * t + p0
        return float(out) if np.ndim(max_excess_ns) == 0 else out

    def posterior_nlos(self, rise_time_ns) -> np.ndarray | float:
        """P(NLOS | rise time) from the exponential likelihoods and the prior.

        Computed in the log domain so very large rise times stay stable.
        """
        t = np.asarray(rise_time_ns, dtype=np.float64)
        if np.any(t < 0):
            raise InvalidInputError("rise time must be non-negative")
        if self.prior_nlos == 0.0:
            out = np.zeros_like(t)
        elif self.prior_nlos == 1.0:
            out = np.ones_like(t)
        else:
            log_nlos = (
                math.log(self.prior_nlos)
                + math.log(self.rate_nlos_per_ns)
                - self.rate_nlos_per_ns * t
            )
            log_los = (
                math.log(1.0 - self.prior_nlos)
                + math.log(self.rate_los_per_ns)
                - self.rate_los_per_ns * t
            )
            with np.errstate(over="ignore"):
                out = 1.0 / (1.0 + np.exp(log_los - log_nlos))
        return float(out) if np.ndim(rise_time_ns) == 0 else out

    def point_estimate(self, features: ChannelFeatures) -> tuple[float, str]:
        """Hard-decision range: classify on the posterior, then de-bias.

        A posterior of exactly 0.5 resolves to LOS.
        """
        posterior = self.posterior_nlos(features.rise_time_ns)
        label = NLOS if posterior > 0.5 else LOS
        ctoa = SPEED_OF_LIGHT_M_PER_NS * features.toa_ns
        if label == NLOS:
            distance = ctoa - self.nlos_error_m(features.max_excess_delay_ns)
        else:
            distance = ctoa - self.los_bias_m
        return float(distance), label

    def range_likelihood(self, features: ChannelFeatures) -> RangeLikelihood:
        """Soft-decision distance likelihood mixing both hypotheses."""
        posterior = float(self.posterior_nlos(features.rise_time_ns))
        ctoa = SPEED_OF_LIGHT_M_PER_NS * features.toa_ns
        return RangeLikelihood(
            weights=(1.0 - posterior, posterior),
            means_m=(
                ctoa - self.los_bias_m,
                ctoa - self.nlos_error_m(features.max_excess_delay_ns),
            ),
            stds_m=(self.sigma_los_m, self.sigma_nlos_m),
        )

    def to_dict(self) -> dict:
        return {
            "mu_L_m": self.los_bias_m,
            "sigma_L_m": self.sigma_los_m,
            "sigma_N_m": self.sigma_nlos_m,
            "poly": list(self.poly),
            "lambda_L_per_ns": self.rate_los_per_ns,
            "lambda_N_per_ns": self.rate_nlos_per_ns,
            "prior_nlos": self.prior_nlos,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RangingModel":
        try:
            poly = payload["poly"]
            return cls(
                los_bias_m=float(payload["mu_L_m"]),
                sigma_los_m=float(payload["sigma_L_m"]),
                sigma_nlos_m=float(payload["sigma_N_m"]),
                poly=(float(poly[0]), float(poly[1]), float(poly[2])),
                rate_los_per_ns=float(payload["lambda_L_per_ns"]),
                rate_nlos_per_ns=float(payload["lambda_N_per_ns"]),
                prior_nlos=float(payload["prior_nlos"]),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise InvalidInputError(f"malformed model payload: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RangingModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


class RangingEstimator(BaseEstimator):
    """scikit-learn style estimator for TOA ranging with soft NLOS handling.

    ``X`` is the canonical ``(n, 8)`` feature matrix (see
    :data:`uwbranging.features.FEATURE_COLUMNS`); ``y`` holds true distances
    in meters and the boolean ``nlos`` fit parameter marks class membership.
    After ``fit`` the constants live in ``model_`` (a :class:`RangingModel`).

    ``predict`` returns hard-decision distances, ``predict_proba`` the
    ``(n, 2)`` LOS/NLOS posterior, and ``predict_likelihood`` one Gaussian
    mixture per row for soft-decision positioning.
    """

    def __init__(self, prior_nlos: float = 0.25):
        self.prior_nlos = prior_nlos

    def fit(self, X, y, nlos=None) -> "RangingEstimator":
        require(0.0 <= self.prior_nlos <= 1.0, "prior_nlos must lie in [0, 1]")
        X = check_feature_matrix(X, len(FEATURE_COLUMNS))
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (X.shape[0],):
            raise InvalidInputError("y must hold one true distance per row of X")
        if not np.all(np.isfinite(y)) or np.any(y <= 0):
            raise InvalidInputError("true distances must be finite and positive")
        if nlos is None:
            raise InvalidInputError("fit requires the boolean nlos class labels")
        nlos = np.asarray(nlos, dtype=bool)
        if nlos.shape != (X.shape[0],):
            raise InvalidInputError("nlos must hold one boolean per row of X")
        if not nlos.any() or nlos.all():
            raise InsufficientDataError("both classes must be present to fit")
        if int(nlos.sum()) < MIN_NLOS_SAMPLES:
            raise InsufficientDataError(
                f"need at least {MIN_NLOS_SAMPLES} NLOS samples, got {int(nlos.sum())}"
            )
        if int((~nlos).sum()) < 2:
            raise InsufficientDataError("need at least 2 LOS samples to fit the bias spread")

        toa_ns = X[:, COL_TOA_NS]
        rise_ns = X[:, COL_RISE_NS]
        max_excess_ns = X[:, COL_MAX_EXCESS_NS]
        error_m = SPEED_OF_LIGHT_M_PER_NS * toa_ns - y

        los = ~nlos
        los_bias = float(error_m[los].mean())
        sigma_los = float((error_m[los] - los_bias).std(ddof=1))

        t_nlos = max_excess_ns[nlos]
        if np.unique(t_nlos).size < 3:
            raise DegenerateFitError(
                "need at least 3 distinct max-excess-delay values for the quadratic fit"
            )
        coeffs = np.polyfit(t_nlos, error_m[nlos], deg=2)
        residual = error_m[nlos] - np.polyval(coeffs, t_nlos)
        sigma_nlos = float(residual.std(ddof=1))

        mean_rise_los = float(rise_ns[los].mean())
        mean_rise_nlos = float(rise_ns[nlos].mean())
        if not mean_rise_los > 0.0 or not mean_rise_nlos > 0.0:
            raise DegenerateFitError("per-class mean rise time must be positive")
        if not sigma_los > 0.0 or not sigma_nlos > 0.0:
            raise DegenerateFitError("residual spread is zero; sigmas undefined")

        self.model_ = RangingModel(
            los_bias_m=los_bias,
            sigma_los_m=sigma_los,
            sigma_nlos_m=sigma_nlos,
            poly=(float(coeffs[0]), float(coeffs[1]), float(coeffs[2])),
            rate_los_per_ns=1.0 / mean_rise_los,
            rate_nlos_per_ns=1.0 / mean_rise_nlos,
            prior_nlos=float(self.prior_nlos),
        )
        return self

    def _check_fitted(self) -> RangingModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise InvalidInputError("estimator is not fitted; call fit or set model_")
        return model

    def predict_proba(self, X) -> np.ndarray:
        """Column 0: P(LOS), column 1: P(NLOS), from the rise time."""
        model = self._check_fitted()
        X = check_feature_matrix(X, len(FEATURE_COLUMNS))
        p_nlos = np.asarray(model.posterior_nlos(X[:, COL_RISE_NS]), dtype=np.float64)
        return np.column_stack([1.0 - p_nlos, p_nlos])

    def predict(self, X) -> np.ndarray:
        """Hard-decision distances in meters."""
        model = self._check_fitted()
        X = check_feature_matrix(X, len(FEATURE_COLUMNS))
        p_nlos = np.asarray(model.posterior_nlos(X[:, COL_RISE_NS]), dtype=np.float64)
        is_nlos = p_nlos > 0.5
        ctoa = SPEED_OF_LIGHT_M_PER_NS * X[:, COL_TOA_NS]
        correction = np.where(
            is_nlos,
            np.asarray(model.nlos_error_m(X[:, COL_MAX_EXCESS_NS]), dtype=np.float64),
            model.los_bias_m,
        )
        return ctoa - correction

    def predict_class(self, X) -> np.ndarray:
        """Hard LOS/NLOS labels (ties at 0.5 resolve to LOS)."""
        proba = self.predict_proba(X)
        return np.where(proba[:, 1] > 0.5, NLOS, LOS)

    def predict_likelihood(self, X) -> list[RangeLikelihood]:
        """One two-component mixture per row."""
        model = self._check_fitted()
        X = check_feature_matrix(X, len(FEATURE_COLUMNS))
        out = []
        for row in X:
            feats = _features_from_row(row)
            out.append(model.range_likelihood(feats))
        return out


def _features_from_row(row: np.ndarray) -> ChannelFeatures:
    return ChannelFeatures(
        toa_s=row[COL_TOA_NS] * 1e-9,
        rss_dbm=row[1],
        pmax_dbm=row[2],
        mean_excess_delay_s=row[3] * 1e-9,
        max_excess_delay_s=row[COL_MAX_EXCESS_NS] * 1e-9,
        rms_delay_spread_s=row[5] * 1e-9,
        rise_time_s=row[COL_RISE_NS] * 1e-9,
        kurtosis=row[7],
    )


def features_from_table_row(table: FeatureTable, index: int) -> ChannelFeatures:
    """Materialize one table row as a :class:`ChannelFeatures`."""
    return _features_from_row(table.matrix[index])


def fit_ranging_model(table: FeatureTable, prior_nlos: float = 0.25) -> RangingModel:
    """Fit from a labeled feature table (labeled rows only)."""
    labeled = table.labeled_mask()
    if not labeled.any():
        raise InsufficientDataError("feature table has no labeled rows")
    estimator = RangingEstimator(prior_nlos=prior_nlos)
    estimator.fit(
        table.matrix[labeled],
        table.true_distance_m[labeled],
        nlos=table.nlos_mask()[labeled],
    )
    return estimator.model_
