"""Channel propagation parameters extracted from one power delay profile.

Eight scalars per sounding: time of arrival, received signal strength,
maximum received power, mean excess delay, maximum excess delay, RMS delay
spread, rise time, and the kurtosis of the unthresholded tap magnitudes.

Discrete convention: integrals over the observation window become sums over
the uniform delay grid times the grid step, and every ``1/T`` normalization
uses the full grid span ``num_samples * delay_step`` (i.e. time averages are
arithmetic means over the grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import (
    DegenerateSignalError,
    InvalidInputError,
    NoSignalDetectedError,
)
from .processing import (
    NLOS_CLASS_SCENARIOS,
    SPEED_OF_LIGHT_M_PER_NS,
    ImpulseResponse,
    PowerDelayProfile,
    SweepRecord,
    compute_pdp,
)

#: Canonical column order used by feature matrices and the feature-table CSV.
FEATURE_COLUMNS = (
    "toa_ns",
    "rss_dbm",
    "pmax_dbm",
    "mean_excess_ns",
    "max_excess_ns",
    "rms_ns",
    "rise_ns",
    "kurtosis",
)

COL_TOA_NS = FEATURE_COLUMNS.index("toa_ns")
COL_MAX_EXCESS_NS = FEATURE_COLUMNS.index("max_excess_ns")
COL_RISE_NS = FEATURE_COLUMNS.index("rise_ns")


@dataclass(frozen=True)
class ChannelFeatures:
    """The eight channel parameters of one sounding (delays in seconds)."""

    toa_s: float
    rss_dbm: float
    pmax_dbm: float
    mean_excess_delay_s: float
    max_excess_delay_s: float
    rms_delay_spread_s: float
    rise_time_s: float
    kurtosis: float

    @property
    def toa_ns(self) -> float:
        return self.toa_s * 1e9

    @property
    def mean_excess_delay_ns(self) -> float:
        return self.mean_excess_delay_s * 1e9

    @property
    def max_excess_delay_ns(self) -> float:
        return self.max_excess_delay_s * 1e9

    @property
    def rms_delay_spread_ns(self) -> float:
        return self.rms_delay_spread_s * 1e9

    @property
    def rise_time_ns(self) -> float:
        return self.rise_time_s * 1e9

    def as_vector(self) -> np.ndarray:
        """Features in :data:`FEATURE_COLUMNS` order (delays in ns)."""
        return np.array(
            [
                self.toa_ns,
                self.rss_dbm,
                self.pmax_dbm,
                self.mean_excess_delay_ns,
                self.max_excess_delay_ns,
                self.rms_delay_spread_ns,
                self.rise_time_ns,
                self.kurtosis,
            ],
            dtype=np.float64,
        )


def extract_features(
    pdp: PowerDelayProfile,
    cir: ImpulseResponse,
    kurtosis_on_thresholded: bool = False,
) -> ChannelFeatures:
    """Compute the eight channel parameters for one sounding.

    Delay statistics come from the thresholded profile; kurtosis is computed
    on the full unthresholded magnitude record unless
    ``kurtosis_on_thresholded`` is set.

    Raises NoSignalDetectedError when no sample exceeded the threshold (a
    missed detection) and DegenerateSignalError when the magnitude record has
    zero variance.
    """
    if not pdp.any_detected():
        raise NoSignalDetectedError(
            f"no sample above {pdp.threshold_dbm} dBm; cannot extract features"
        )
    if pdp.num_samples != cir.num_taps:
        raise InvalidInputError("profile and impulse response lengths differ")

    dt = pdp.delay_step_s
    delays = pdp.delays_s()
    p_thr = pdp.thresholded_power_mw()
    detected = np.flatnonzero(pdp.mask)

    toa = delays[detected[0]]
    max_excess = delays[detected[-1]] - toa

    total = float(p_thr.sum())
    mean_excess = float((delays * p_thr).sum()) / total
    rms = float(np.sqrt(((delays - mean_excess) ** 2 * p_thr).sum() / total))

    # argmax keeps the earliest index on ties, matching the leading-edge rule
    rise = delays[int(np.argmax(p_thr))] - toa

    span = pdp.num_samples * dt
    rss_dbm = 10.0 * np.log10(total * dt / (span * pdp.reference_power_mw))
    pmax_dbm = 10.0 * np.log10(float(p_thr.max()) / pdp.reference_power_mw)

    magnitude = np.abs(cir.taps)
    if kurtosis_on_thresholded:
        magnitude = np.where(pdp.mask, magnitude, 0.0)
    centered = magnitude - magnitude.mean()
    m2 = float((centered**2).mean())
    if m2 <= 0.0:
        raise DegenerateSignalError("magnitude record has zero variance; kurtosis undefined")
    kurt = float((centered**4).mean()) / (m2 * m2)

    return ChannelFeatures(
        toa_s=float(toa),
        rss_dbm=float(rss_dbm),
        pmax_dbm=float(pmax_dbm),
        mean_excess_delay_s=float(mean_excess),
        max_excess_delay_s=float(max_excess),
        rms_delay_spread_s=float(rms),
        rise_time_s=float(rise),
        kurtosis=kurt,
    )


@dataclass
class FeatureTable:
    """Labeled per-record features: ids, scenario labels, distances, matrix.

    ``matrix`` columns follow :data:`FEATURE_COLUMNS`.  ``true_distance_m``
    holds NaN and ``scenario`` holds ``""`` for unlabeled records.
    """

    record_ids: list[str]
    scenarios: list[str]
    true_distance_m: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        n = len(self.record_ids)
        self.true_distance_m = np.asarray(self.true_distance_m, dtype=np.float64)
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if len(self.scenarios) != n or self.true_distance_m.shape != (n,):
            raise InvalidInputError("feature table columns have mismatched lengths")
        if self.matrix.shape != (n, len(FEATURE_COLUMNS)):
            raise InvalidInputError(
                f"feature matrix must be (n, {len(FEATURE_COLUMNS)}), got {self.matrix.shape}"
            )

    def __len__(self) -> int:
        return len(self.record_ids)

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, FEATURE_COLUMNS.index(name)]

    def labeled_mask(self) -> np.ndarray:
        return np.array([s != "" for s in self.scenarios], dtype=bool) & np.isfinite(
            self.true_distance_m
        )

    def nlos_mask(self) -> np.ndarray:
        """True for rows pooled into the NLOS class (wall-blocked scenario)."""
        return np.array([s in NLOS_CLASS_SCENARIOS for s in self.scenarios], dtype=bool)

    def ranging_error_m(self) -> np.ndarray:
        """c*toa - true distance, in meters (NaN for unlabeled rows)."""
        return SPEED_OF_LIGHT_M_PER_NS * self.column("toa_ns") - self.true_distance_m


def extract_feature_table(
    records: list[SweepRecord],
    threshold_dbm: float,
    reference_power_mw: float = 1.0,
) -> tuple[FeatureTable, list[tuple[str, str]]]:
    """Extract features for a batch of records at one threshold.

    Records whose PDP is empty at the threshold (missed detections) are
    skipped and reported in the second return value as (record_id, reason).
    """
    ids: list[str] = []
    scenarios: list[str] = []
    distances: list[float] = []
    rows: list[np.ndarray] = []
    skipped: list[tuple[str, str]] = []
    for rec in records:
        pdp = compute_pdp(rec.cir, threshold_dbm, reference_power_mw)
        try:
            feats = extract_features(pdp, rec.cir)
        except NoSignalDetectedError:
            skipped.append((rec.record_id, "missed_detection"))
            continue
        except DegenerateSignalError:
            skipped.append((rec.record_id, "degenerate_signal"))
            continue
        ids.append(rec.record_id)
        scenarios.append(rec.scenario or "")
        distances.append(rec.true_distance_m if rec.true_distance_m is not None else np.nan)
        rows.append(feats.as_vector())
    matrix = np.vstack(rows) if rows else np.empty((0, len(FEATURE_COLUMNS)))
    table = FeatureTable(
        record_ids=ids,
        scenarios=scenarios,
        true_distance_m=np.asarray(distances, dtype=np.float64),
        matrix=matrix,
    )
    return table, skipped


class ChannelFeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping impulse responses to the feature matrix.

    ``transform`` accepts a sequence of :class:`ImpulseResponse` and returns
    an ``(n, 8)`` array in :data:`FEATURE_COLUMNS` order, so the extractor
    slots in front of the ranging estimator in a scikit-learn pipeline.
    """

    def __init__(self, threshold_dbm: float = -43.8, reference_power_mw: float = 1.0):
        self.threshold_dbm = threshold_dbm
        self.reference_power_mw = reference_power_mw

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        rows = []
        for i, cir in enumerate(X):
            if not isinstance(cir, ImpulseResponse):
                raise InvalidInputError(f"item {i} is not an ImpulseResponse")
            pdp = compute_pdp(cir, self.threshold_dbm, self.reference_power_mw)
            rows.append(extract_features(pdp, cir).as_vector())
        return np.vstack(rows) if rows else np.empty((0, len(FEATURE_COLUMNS)))
