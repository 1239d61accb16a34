"""Sweep ingestion: frequency responses to impulse responses to power delay profiles.

Conventions fixed project-wide:

* Linear power is expressed in milliwatts, so a tap of unit magnitude sits at
  0 dBm against the 1 mW reference.
* The frequency/time transform pair is unitary (``norm="ortho"``), which keeps
  total energy identical on both sides and makes the round trip exact.  Input
  spectra are assumed calibrated by the acquisition chain; no additional
  amplitude compensation is applied for the Hann window.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import InvalidInputError
from .validation import as_complex_vector, require

SPEED_OF_LIGHT_M_PER_S = 3.0e8
SPEED_OF_LIGHT_M_PER_NS = 0.3

#: Operating detection threshold used by default throughout the pipeline.
DEFAULT_THRESHOLD_DBM = -43.8

WINDOW_HANN = "hann"
WINDOW_NONE = "none"

SCENARIO_LOS = "LOS"
SCENARIO_NLOS_METAL = "NLOS-M"
SCENARIO_NLOS_PERSON = "NLOS-P"
SCENARIO_NLOS_WALL = "NLOS-W"
SCENARIOS = (SCENARIO_LOS, SCENARIO_NLOS_METAL, SCENARIO_NLOS_PERSON, SCENARIO_NLOS_WALL)

# Soft obstructions (metal sheet, person) range like LOS; only wall blockage
# forms the NLOS class for modeling purposes.
NLOS_CLASS_SCENARIOS = frozenset({SCENARIO_NLOS_WALL})


def is_nlos_class(scenario: str) -> bool:
    """True when the scenario pools into the NLOS class (wall blockage)."""
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {scenario!r}")
    return scenario in NLOS_CLASS_SCENARIOS


@dataclass(frozen=True)
class SweepConfig:
    """Acquisition geometry of one frequency sweep.

    ``time_resolution_s`` and ``observation_interval_s`` may each be omitted;
    the missing one is derived so that
    ``observation_interval_s == (num_points - 1) * time_resolution_s``.
    """

    center_frequency_hz: float = 3.5e9
    bandwidth_hz: float = 2.0e9
    num_points: int = 3001
    time_resolution_s: float | None = None
    observation_interval_s: float | None = None
    reference_power_mw: float = 1.0
    window: str = WINDOW_HANN

    def __post_init__(self):
        require(self.num_points >= 2, "num_points must be at least 2")
        require(self.bandwidth_hz > 0, "bandwidth must be positive")
        require(
            self.center_frequency_hz - self.bandwidth_hz / 2.0 > 0,
            "sweep must not extend to or below 0 Hz",
        )
        require(self.reference_power_mw > 0, "reference power must be positive")
        require(self.window in (WINDOW_HANN, WINDOW_NONE), f"unknown window {self.window!r}")
        dt = self.time_resolution_s
        span = self.observation_interval_s
        if dt is None and span is None:
            dt = 1.0 / self.bandwidth_hz
            span = (self.num_points - 1) * dt
        elif dt is None:
            dt = span / (self.num_points - 1)
        elif span is None:
            require(dt > 0, "time resolution must be positive")
            span = (self.num_points - 1) * dt
        else:
            require(
                abs(span - (self.num_points - 1) * dt) <= 1e-9 * span,
                "observation interval must equal (num_points - 1) * time_resolution",
            )
        require(dt > 0, "time resolution must be positive")
        object.__setattr__(self, "time_resolution_s", float(dt))
        object.__setattr__(self, "observation_interval_s", float(span))

    @property
    def frequency_step_hz(self) -> float:
        return self.bandwidth_hz / (self.num_points - 1)

    @property
    def min_frequency_hz(self) -> float:
        return self.center_frequency_hz - self.bandwidth_hz / 2.0

    def frequencies_hz(self) -> np.ndarray:
        return self.min_frequency_hz + self.frequency_step_hz * np.arange(self.num_points)


@dataclass(frozen=True)
class FrequencyResponse:
    """Calibrated complex frequency sweep, one sample per sweep point."""

    samples: np.ndarray
    config: SweepConfig

    def __post_init__(self):
        samples = as_complex_vector(self.samples, "frequency samples")
        if samples.size != self.config.num_points:
            raise InvalidInputError(
                f"expected {self.config.num_points} frequency samples, got {samples.size}"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class ImpulseResponse:
    """Complex channel taps on a uniform delay grid starting at ``origin_delay_s``."""

    taps: np.ndarray
    delay_step_s: float
    origin_delay_s: float = 0.0

    def __post_init__(self):
        taps = as_complex_vector(self.taps, "taps")
        require(self.delay_step_s > 0, "delay step must be positive")
        require(self.origin_delay_s >= 0, "origin delay must be non-negative")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def num_taps(self) -> int:
        return int(self.taps.size)

    def delays_s(self) -> np.ndarray:
        return self.origin_delay_s + self.delay_step_s * np.arange(self.taps.size)

    def power_mw(self) -> np.ndarray:
        return np.abs(self.taps) ** 2


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap powers plus the boolean detection mask for a threshold in dBm.

    ``mask[i]`` is true exactly when ``10*log10(power[i]/reference) `` strictly
    exceeds ``threshold_dbm``; the thresholded profile is ``power * mask``.
    """

    power_mw: np.ndarray
    delay_step_s: float
    threshold_dbm: float
    mask: np.ndarray
    origin_delay_s: float = 0.0
    reference_power_mw: float = 1.0

    def __post_init__(self):
        power = np.asarray(self.power_mw, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        require(power.ndim == 1 and power.size > 0, "power must be a non-empty vector")
        if not np.all(np.isfinite(power)) or np.any(power < 0):
            raise InvalidInputError("power values must be finite and non-negative")
        require(mask.shape == power.shape, "mask must align with power samples")
        require(np.isfinite(self.threshold_dbm), "threshold must be finite")
        require(self.delay_step_s > 0, "delay step must be positive")
        require(self.reference_power_mw > 0, "reference power must be positive")
        with np.errstate(divide="ignore"):
            expected = 10.0 * np.log10(power / self.reference_power_mw) > self.threshold_dbm
        require(bool(np.array_equal(mask, expected)), "mask inconsistent with threshold")
        power.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "power_mw", power)
        object.__setattr__(self, "mask", mask)

    @property
    def num_samples(self) -> int:
        return int(self.power_mw.size)

    def delays_s(self) -> np.ndarray:
        return self.origin_delay_s + self.delay_step_s * np.arange(self.power_mw.size)

    def thresholded_power_mw(self) -> np.ndarray:
        return np.where(self.mask, self.power_mw, 0.0)

    def any_detected(self) -> bool:
        return bool(self.mask.any())


@dataclass(frozen=True)
class SweepRecord:
    """One sounding: a channel response plus campaign metadata.

    ``true_distance_m`` and ``scenario`` are present on training/verification
    records and absent on field records.
    """

    record_id: str
    cir: ImpulseResponse
    tx_id: str = ""
    rx_id: str = ""
    true_distance_m: float | None = None
    scenario: str | None = None

    def __post_init__(self):
        if self.true_distance_m is not None:
            require(self.true_distance_m > 0, f"{self.record_id}: distance must be positive")
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise InvalidInputError(f"{self.record_id}: unknown scenario {self.scenario!r}")

    @property
    def true_toa_s(self) -> float | None:
        if self.true_distance_m is None:
            return None
        return self.true_distance_m / SPEED_OF_LIGHT_M_PER_S


def hann_window(num_points: int) -> np.ndarray:
    """Symmetric Hann window w[n] = 0.5 * (1 - cos(2*pi*n/(N-1)))."""
    require(num_points >= 2, "window needs at least 2 points")
    n = np.arange(num_points)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (num_points - 1)))


def _window_values(config: SweepConfig) -> np.ndarray:
    if config.window == WINDOW_HANN:
        return hann_window(config.num_points)
    return np.ones(config.num_points)


def ingest_frequency_response(raw: FrequencyResponse) -> ImpulseResponse:
    """Window the sweep and transform it to channel taps on the delay grid.

    The transform is the unitary inverse DFT, so the tap energy equals the
    windowed spectrum energy and :func:`impulse_to_frequency_response`
    inverts it exactly.  Taps are labeled with nonnegative delays at
    ``observation_interval / (num_points - 1)`` spacing.
    """
    config = raw.config
    windowed = raw.samples * _window_values(config)
    taps = np.fft.ifft(windowed, n=config.num_points, norm="ortho")
    delay_step = config.observation_interval_s / (config.num_points - 1)
    return ImpulseResponse(taps=taps, delay_step_s=delay_step, origin_delay_s=0.0)


def impulse_to_frequency_response(cir: ImpulseResponse, config: SweepConfig) -> FrequencyResponse:
    """Forward (unitary) transform back to the windowed spectrum."""
    if cir.num_taps != config.num_points:
        raise InvalidInputError(
            f"expected {config.num_points} taps, got {cir.num_taps}"
        )
    samples = np.fft.fft(cir.taps, n=config.num_points, norm="ortho")
    return FrequencyResponse(samples=samples, config=config)


def compute_pdp(
    cir: ImpulseResponse,
    threshold_dbm: float,
    reference_power_mw: float = 1.0,
) -> PowerDelayProfile:
    """Square the taps and mark every sample strictly above the threshold.

    A sample is detected when ``10*log10(|tap|^2 / reference) > threshold_dbm``;
    ties at exactly the threshold are excluded.
    """
    if not np.isfinite(threshold_dbm):
        raise InvalidInputError("threshold must be finite")
    require(reference_power_mw > 0, "reference power must be positive")
    power = cir.power_mw()
    with np.errstate(divide="ignore"):
        level_dbm = 10.0 * np.log10(power / reference_power_mw)
    mask = level_dbm > threshold_dbm
    return PowerDelayProfile(
        power_mw=power,
        delay_step_s=cir.delay_step_s,
        threshold_dbm=float(threshold_dbm),
        mask=mask,
        origin_delay_s=cir.origin_delay_s,
        reference_power_mw=float(reference_power_mw),
    )


def with_threshold(pdp: PowerDelayProfile, threshold_dbm: float) -> PowerDelayProfile:
    """Re-threshold an existing profile without recomputing powers."""
    if not np.isfinite(threshold_dbm):
        raise InvalidInputError("threshold must be finite")
    with np.errstate(divide="ignore"):
        level_dbm = 10.0 * np.log10(pdp.power_mw / pdp.reference_power_mw)
    return replace(pdp, threshold_dbm=float(threshold_dbm), mask=level_dbm > threshold_dbm)
