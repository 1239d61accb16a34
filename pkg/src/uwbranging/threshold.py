"""Detection-threshold selection from false-alarm and missed-detection rates.

A candidate threshold produces a missed detection on a record when no sample
exceeds it, and a false alarm when the first crossing precedes the true
arrival by more than a guard interval.  The guard must cover both the
bandwidth-limited leading-edge smear (about the inverse bandwidth) and the
systematic early bias of edge detection, else honest detections count as
false alarms; the 3 ns default covers a bias near -0.3 m plus jitter.  The
operating point minimizes ``max(fa_rate, md_rate)``, ties going to the lower
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSignalError, InsufficientDataError, InvalidInputError
from .processing import SweepRecord
from .validation import as_float_vector, require

#: Minimum number of pre-arrival samples required of every record used for
#: noise estimation.
MIN_PRE_ARRIVAL_SAMPLES = 50


@dataclass(frozen=True)
class NoiseStats:
    """Thermal-noise level fitted in the dB domain."""

    mean_dbm: float
    sigma_db: float

    def __post_init__(self):
        require(np.isfinite(self.mean_dbm), "noise mean must be finite")
        require(np.isfinite(self.sigma_db) and self.sigma_db > 0, "noise sigma must be positive")

    def sigma_multiple(self, threshold_dbm: float) -> float:
        """Express a threshold as mean + k*sigma and return k."""
        return (threshold_dbm - self.mean_dbm) / self.sigma_db


@dataclass(frozen=True)
class ThresholdCurve:
    """False-alarm / missed-detection rates over a candidate grid."""

    thresholds_dbm: np.ndarray
    fa_rate: np.ndarray
    md_rate: np.ndarray
    selected_dbm: float

    def __post_init__(self):
        th = as_float_vector(self.thresholds_dbm, "thresholds")
        fa = as_float_vector(self.fa_rate, "fa_rate", min_size=th.size)
        md = as_float_vector(self.md_rate, "md_rate", min_size=th.size)
        require(fa.size == th.size and md.size == th.size, "curve columns must align")
        require(np.all(np.diff(th) > 0), "thresholds must be strictly ascending")
        require(np.all((fa >= 0) & (fa <= 1)), "fa_rate must lie in [0, 1]")
        require(np.all((md >= 0) & (md <= 1)), "md_rate must lie in [0, 1]")
        require(np.all(np.diff(md) >= 0), "md_rate must be non-decreasing in threshold")
        require(np.all(np.diff(fa) <= 0), "fa_rate must be non-increasing in threshold")
        require(bool(np.any(th == self.selected_dbm)), "selected threshold must be a candidate")
        for name, arr in (("thresholds_dbm", th), ("fa_rate", fa), ("md_rate", md)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _record_level_dbm(record: SweepRecord, reference_power_mw: float) -> np.ndarray:
    power = record.cir.power_mw()
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power / reference_power_mw)


def _pre_arrival_count(record: SweepRecord, guard_s: float) -> int:
    toa = record.true_toa_s
    if toa is None:
        raise InvalidInputError(f"{record.record_id}: true distance required")
    cutoff = toa - guard_s - record.cir.origin_delay_s
    return int(np.ceil(cutoff / record.cir.delay_step_s - 1e-12))


def estimate_noise_stats(
    records: list[SweepRecord],
    guard_s: float = 5e-9,
    reference_power_mw: float = 1.0,
) -> NoiseStats:
    """Fit mean and sigma of the pre-arrival noise, in the dB domain.

    Pools every sample earlier than ``true_toa - guard`` across all records.
    Every record must leave at least :data:`MIN_PRE_ARRIVAL_SAMPLES` such
    samples; zero-power samples (dB of -inf) are discarded before fitting.
    """
    if not records:
        raise InsufficientDataError("no records supplied for noise estimation")
    pooled: list[np.ndarray] = []
    for rec in records:
        n_pre = _pre_arrival_count(rec, guard_s)
        if n_pre < MIN_PRE_ARRIVAL_SAMPLES:
            raise InsufficientDataError(
                f"{rec.record_id}: only {max(n_pre, 0)} pre-arrival samples, "
                f"need {MIN_PRE_ARRIVAL_SAMPLES}"
            )
        level = _record_level_dbm(rec, reference_power_mw)[:n_pre]
        pooled.append(level[np.isfinite(level)])
    samples = np.concatenate(pooled)
    if samples.size < MIN_PRE_ARRIVAL_SAMPLES:
        raise InsufficientDataError("too few finite pre-arrival samples")
    sigma = float(samples.std(ddof=1))
    if sigma <= 0.0:
        raise DegenerateSignalError("pre-arrival samples are constant; noise sigma is zero")
    return NoiseStats(mean_dbm=float(samples.mean()), sigma_db=sigma)


def noise_estimation_subset(records: list[SweepRecord], guard_s: float = 5e-9) -> list[SweepRecord]:
    """Records with enough pre-arrival room to qualify for noise estimation."""
    return [
        rec
        for rec in records
        if rec.true_distance_m is not None
        and _pre_arrival_count(rec, guard_s) >= MIN_PRE_ARRIVAL_SAMPLES
    ]


def sweep_thresholds(
    records: list[SweepRecord],
    candidates_dbm,
    fa_guard_s: float = 3e-9,
    reference_power_mw: float = 1.0,
) -> ThresholdCurve:
    """Evaluate FA/MD rates per candidate threshold and pick the operating point.

    Candidates must be sorted ascending.  The selected threshold minimizes
    ``max(fa_rate, md_rate)``; on ties the lowest candidate wins.
    """
    candidates = np.asarray(candidates_dbm, dtype=np.float64)
    if candidates.size == 0:
        raise InvalidInputError("candidate threshold grid is empty")
    candidates = as_float_vector(candidates, "candidates")
    require(np.all(np.diff(candidates) > 0), "candidates must be strictly ascending")
    if not records:
        raise InsufficientDataError("no records supplied for the threshold sweep")

    fa_counts = np.zeros(candidates.size, dtype=np.int64)
    md_counts = np.zeros(candidates.size, dtype=np.int64)
    for rec in records:
        toa = rec.true_toa_s
        if toa is None:
            raise InvalidInputError(f"{rec.record_id}: true distance required")
        level = _record_level_dbm(rec, reference_power_mw)
        delays = rec.cir.delays_s()
        # The running maximum is non-decreasing, so the first strict crossing
        # of every candidate comes from one searchsorted call.
        running_max = np.maximum.accumulate(level)
        first_idx = np.searchsorted(running_max, candidates, side="right")
        missed = first_idx >= level.size
        first_delay = delays[np.minimum(first_idx, level.size - 1)]
        early = ~missed & (first_delay < toa - fa_guard_s)
        md_counts += missed
        fa_counts += early

    n = float(len(records))
    fa = fa_counts / n
    md = md_counts / n
    worst = np.maximum(fa, md)
    selected = float(candidates[int(np.argmin(worst))])  # argmin keeps the lowest on ties
    return ThresholdCurve(
        thresholds_dbm=candidates,
        fa_rate=fa,
        md_rate=md,
        selected_dbm=selected,
    )
