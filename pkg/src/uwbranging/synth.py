"""Parametric synthetic tunnel-channel generator.

The generator is statistical rather than ray-traced: it places a first
detected path at the geometric delay plus a class-dependent range error,
shapes a dominant later reflection so per-class rise times follow exponential
laws, spreads decaying clutter taps up to a drawn maximum excess delay, and
adds dB-domain Gaussian thermal noise.  For wall-blocked records the range
error is drawn conditionally on the realized maximum excess delay so that a
downstream quadratic fit can recover the configured error curve.

The default profile targets the statistics of a reference tunnel campaign
(:func:`default_tunnel_profile`); a second profile with heavily overlapping
rise times supports robustness experiments (:func:`mine_tunnel_profile`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .exceptions import InvalidProfileError
from .features import extract_feature_table
from .processing import (
    DEFAULT_THRESHOLD_DBM,
    SCENARIO_LOS,
    SCENARIO_NLOS_METAL,
    SCENARIO_NLOS_PERSON,
    SCENARIO_NLOS_WALL,
    SCENARIOS,
    SPEED_OF_LIGHT_M_PER_NS,
    ImpulseResponse,
    SweepConfig,
    SweepRecord,
    is_nlos_class,
)
from .threshold import estimate_noise_stats, noise_estimation_subset

_DB_PER_NEPER = 10.0 / math.log(10.0)


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PowerLawParams:
    """Direct-path power model: dBm at 1 m minus decay, minus scenario loss.

    ``reference_dbm_at_1m = None`` disables the signal entirely (noise-only
    records, useful for missed-detection checks).  Floors keep the structural
    first/last taps far enough above both the detection threshold and the
    noise ceiling that thresholding recovers the intended support exactly.
    """

    reference_dbm_at_1m: float | None = -10.0
    decay_exponent: float = 1.3
    shadowing_sigma_db: float = 1.5
    extra_loss_db: dict = field(
        default_factory=lambda: {
            SCENARIO_LOS: 0.0,
            SCENARIO_NLOS_METAL: 3.0,
            SCENARIO_NLOS_PERSON: 4.0,
            SCENARIO_NLOS_WALL: 9.0,
        }
    )
    extra_loss_sigma_db: dict = field(
        default_factory=lambda: {
            SCENARIO_LOS: 0.0,
            SCENARIO_NLOS_METAL: 1.0,
            SCENARIO_NLOS_PERSON: 1.0,
            SCENARIO_NLOS_WALL: 2.0,
        }
    )
    first_path_floor_dbm: float = -35.0
    last_path_floor_dbm: float = -37.0


@dataclass(frozen=True)
class MultipathParams:
    """Clutter taps between the first and last detected path."""

    mid_tap_count: tuple[int, int] = (6, 20)
    power_decay_ns: tuple[float, float] = (8.0, 30.0)
    max_excess_ns_los: tuple[float, float] = (15.0, 150.0)
    max_excess_ns_nlos: tuple[float, float] = (10.0, 130.0)


@dataclass(frozen=True)
class RiseTimeParams:
    """Exponential rise-time rates per pooled class (1/ns)."""

    rate_los_per_ns: float = 0.333
    rate_nlos_per_ns: float = 0.075


@dataclass(frozen=True)
class LosBiasParams:
    """Range error of unobstructed records (meters), before grid snapping."""

    mean_m: float = -0.27
    sigma_m: float = 0.154


@dataclass(frozen=True)
class NlosBiasParams:
    """Range error of wall-blocked records: curve over max excess delay (ns).

    ``sigma_m`` is the pooled residual spread around the curve.  Realized
    residuals scale with the curve height and are bounded below by the curve
    itself, so a detected path never precedes the geometric arrival; an
    unbounded residual would otherwise turn the small-curve region into
    permanent early detections.  ``cluster_offsets_m`` optionally
    superimposes discrete error clusters on the residual; this is
    speculative structure and stays off by default.
    """

    poly: tuple[float, float, float] = (0.00087, -0.2, 11.72)
    sigma_m: float = 1.61
    sigma_cap_m: float = 2.5
    cluster_offsets_m: tuple[float, ...] | None = None
    cluster_weights: tuple[float, ...] | None = None

    def curve_m(self, max_excess_ns):
        t = np.asarray(max_excess_ns, dtype=np.float64)
        p2, p1, p0 = self.poly
        return p2 * t * t + p1 * t + p0

    def residual_sigma_m(self, curve_value_m, scale: float):
        """Local residual spread: proportional to the curve, capped."""
        return np.minimum(scale * np.asarray(curve_value_m, dtype=np.float64), self.sigma_cap_m)

    def residual_scale(self, max_excess_range_ns: tuple[float, float]) -> float:
        """Relative residual scale giving the pooled ``sigma_m``.

        Solves ``E[eps^2] = sigma_m^2`` over a uniform max-excess draw, where
        ``eps`` is a centered Gaussian with local sigma
        ``min(scale*curve, sigma_cap_m)`` truncated so the total error stays
        (essentially) non-negative.
        """
        if self.sigma_m == 0.0:
            return 0.0
        lo, hi = max_excess_range_ns
        grid = np.linspace(lo, hi, 4096)
        g = np.asarray(self.curve_m(grid), dtype=np.float64)
        if not np.any(g > 0):
            raise InvalidProfileError("error curve is zero but residual sigma is not")

        def pooled_var(scale: float) -> float:
            sig = self.residual_sigma_m(g, scale)
            with np.errstate(divide="ignore", invalid="ignore"):
                a = np.where(sig > 0, -g / np.maximum(sig, 1e-300), -np.inf)
            z = 1.0 - ndtr(a)
            m = np.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi) / z
            var = 1.0 + a * m - m * m
            return float((sig**2 * np.where(np.isfinite(var), var, 1.0)).mean())

        lo_s, hi_s = 1e-6, 64.0
        if pooled_var(hi_s) < self.sigma_m**2:
            raise InvalidProfileError(
                "residual sigma target unreachable; raise sigma_cap_m or the curve"
            )
        for _ in range(80):
            mid = 0.5 * (lo_s + hi_s)
            if pooled_var(mid) < self.sigma_m**2:
                lo_s = mid
            else:
                hi_s = mid
        return 0.5 * (lo_s + hi_s)


@dataclass(frozen=True)
class NoiseParams:
    """dB-domain Gaussian thermal noise, truncated ``cap_sigma`` above the mean.

    The cap keeps the noise ceiling strictly below the operating threshold so
    detection support stays deterministic; push it higher to study false
    alarms at the operating point.
    """

    mean_dbm: float = -64.0
    sigma_db: float = 6.0
    cap_sigma: float = 3.2

    @property
    def ceiling_dbm(self) -> float:
        return self.mean_dbm + self.cap_sigma * self.sigma_db


@dataclass(frozen=True)
class SynthProfile:
    """Everything needed to synthesize one campaign deterministically."""

    tx_positions_m: tuple[tuple[float, float], ...] = ((0.0, 0.4), (12.0, 0.4), (24.0, 0.4))
    rx_positions_m: tuple[tuple[float, float], ...] = tuple(
        (1.0 + i, 2.2) for i in range(30)
    )
    repetitions: dict = field(
        default_factory=lambda: {
            SCENARIO_LOS: 10,
            SCENARIO_NLOS_METAL: 10,
            SCENARIO_NLOS_PERSON: 10,
            SCENARIO_NLOS_WALL: 10,
        }
    )
    sweep: SweepConfig = field(default_factory=SweepConfig)
    power: PowerLawParams = field(default_factory=PowerLawParams)
    multipath: MultipathParams = field(default_factory=MultipathParams)
    rise_time: RiseTimeParams = field(default_factory=RiseTimeParams)
    los_bias: LosBiasParams = field(default_factory=LosBiasParams)
    nlos_bias: NlosBiasParams = field(default_factory=NlosBiasParams)
    noise: NoiseParams | None = field(default_factory=NoiseParams)
    seed: int = 5550123

    def __post_init__(self):
        if not self.tx_positions_m or not self.rx_positions_m:
            raise InvalidProfileError("geometry needs at least one tx and one rx position")
        for scenario, count in self.repetitions.items():
            if scenario not in SCENARIOS:
                raise InvalidProfileError(f"unknown scenario {scenario!r} in repetitions")
            if count < 0:
                raise InvalidProfileError("repetition counts must be non-negative")
        if self.rise_time.rate_los_per_ns <= 0 or self.rise_time.rate_nlos_per_ns <= 0:
            raise InvalidProfileError("rise-time rates must be positive")
        if self.los_bias.sigma_m < 0 or self.nlos_bias.sigma_m < 0:
            raise InvalidProfileError("bias sigmas must be non-negative")
        if self.noise is not None and (self.noise.sigma_db <= 0 or self.noise.cap_sigma <= 0):
            raise InvalidProfileError("noise sigma and cap must be positive")
        lo, hi = self.multipath.mid_tap_count
        if lo < 0 or hi < lo:
            raise InvalidProfileError("mid tap count range must satisfy 0 <= lo <= hi")
        for rng_ns in (self.multipath.max_excess_ns_los, self.multipath.max_excess_ns_nlos):
            if rng_ns[0] < 0 or rng_ns[1] < rng_ns[0]:
                raise InvalidProfileError("max excess delay ranges must be non-negative and ordered")
        clusters = self.nlos_bias.cluster_offsets_m
        weights = self.nlos_bias.cluster_weights
        if (clusters is None) != (weights is None):
            raise InvalidProfileError("cluster offsets and weights must be given together")
        if clusters is not None:
            if len(clusters) != len(weights) or abs(sum(weights) - 1.0) > 1e-9:
                raise InvalidProfileError("cluster weights must align with offsets and sum to 1")
        if self.power.reference_dbm_at_1m is not None:
            self._check_feasible()

    def _check_feasible(self):
        dt_ns = self.sweep.time_resolution_s * 1e9
        window_ns = (self.sweep.num_points - 1) * dt_ns
        dmin, dmax = self.distance_range_m()
        if self.repetitions.get(SCENARIO_NLOS_WALL, 0) > 0:
            span = self.multipath.max_excess_ns_nlos
            curve = self.nlos_bias.curve_m(np.linspace(span[0], span[1], 512))
            if np.any(curve < 0):
                raise InvalidProfileError(
                    "error curve goes negative over the max-excess range; "
                    "a detected path would precede the direct path"
                )
            scale = self.nlos_bias.residual_scale(span)
            worst_sigma = float(self.nlos_bias.residual_sigma_m(curve, scale).max())
            worst_bias = float(curve.max()) + 6.0 * worst_sigma
            if self.nlos_bias.cluster_offsets_m:
                worst_bias += max(abs(o) for o in self.nlos_bias.cluster_offsets_m)
            latest_ns = (dmax + worst_bias) / SPEED_OF_LIGHT_M_PER_NS + span[1]
            if latest_ns >= window_ns:
                raise InvalidProfileError("latest path would fall outside the observation window")
        latest_los_ns = (
            dmax + self.los_bias.mean_m + 6.0 * self.los_bias.sigma_m
        ) / SPEED_OF_LIGHT_M_PER_NS + self.multipath.max_excess_ns_los[1]
        if latest_los_ns >= window_ns:
            raise InvalidProfileError("latest path would fall outside the observation window")
        earliest_m = dmin + self.los_bias.mean_m - 6.0 * self.los_bias.sigma_m
        if earliest_m <= SPEED_OF_LIGHT_M_PER_NS * dt_ns:
            raise InvalidProfileError("earliest path would fall at or before the grid origin")

    def distance_range_m(self) -> tuple[float, float]:
        tx = np.asarray(self.tx_positions_m, dtype=np.float64)
        rx = np.asarray(self.rx_positions_m, dtype=np.float64)
        d = np.hypot(
            rx[:, 0][None, :] - tx[:, 0][:, None], rx[:, 1][None, :] - tx[:, 1][:, None]
        )
        return float(d.min()), float(d.max())

    def num_records(self) -> int:
        pairs = len(self.tx_positions_m) * len(self.rx_positions_m)
        return pairs * sum(self.repetitions.get(s, 0) for s in SCENARIOS)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "tx_positions_m": [list(p) for p in self.tx_positions_m],
            "rx_positions_m": [list(p) for p in self.rx_positions_m],
            "repetitions": dict(self.repetitions),
            "sweep": {
                "center_frequency_hz": self.sweep.center_frequency_hz,
                "bandwidth_hz": self.sweep.bandwidth_hz,
                "num_points": self.sweep.num_points,
                "time_resolution_s": self.sweep.time_resolution_s,
                "observation_interval_s": self.sweep.observation_interval_s,
                "reference_power_mw": self.sweep.reference_power_mw,
                "window": self.sweep.window,
            },
            "power": {
                "reference_dbm_at_1m": self.power.reference_dbm_at_1m,
                "decay_exponent": self.power.decay_exponent,
                "shadowing_sigma_db": self.power.shadowing_sigma_db,
                "extra_loss_db": dict(self.power.extra_loss_db),
                "extra_loss_sigma_db": dict(self.power.extra_loss_sigma_db),
                "first_path_floor_dbm": self.power.first_path_floor_dbm,
                "last_path_floor_dbm": self.power.last_path_floor_dbm,
            },
            "multipath": {
                "mid_tap_count": list(self.multipath.mid_tap_count),
                "power_decay_ns": list(self.multipath.power_decay_ns),
                "max_excess_ns_los": list(self.multipath.max_excess_ns_los),
                "max_excess_ns_nlos": list(self.multipath.max_excess_ns_nlos),
            },
            "rise_time": {
                "rate_los_per_ns": self.rise_time.rate_los_per_ns,
                "rate_nlos_per_ns": self.rise_time.rate_nlos_per_ns,
            },
            "los_bias": {"mean_m": self.los_bias.mean_m, "sigma_m": self.los_bias.sigma_m},
            "nlos_bias": {
                "poly": list(self.nlos_bias.poly),
                "sigma_m": self.nlos_bias.sigma_m,
                "sigma_cap_m": self.nlos_bias.sigma_cap_m,
                "cluster_offsets_m": list(self.nlos_bias.cluster_offsets_m)
                if self.nlos_bias.cluster_offsets_m is not None
                else None,
                "cluster_weights": list(self.nlos_bias.cluster_weights)
                if self.nlos_bias.cluster_weights is not None
                else None,
            },
            "noise": None
            if self.noise is None
            else {
                "mean_dbm": self.noise.mean_dbm,
                "sigma_db": self.noise.sigma_db,
                "cap_sigma": self.noise.cap_sigma,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SynthProfile":
        try:
            noise = payload.get("noise")
            nb = payload["nlos_bias"]
            return cls(
                tx_positions_m=tuple(tuple(p) for p in payload["tx_positions_m"]),
                rx_positions_m=tuple(tuple(p) for p in payload["rx_positions_m"]),
                repetitions=dict(payload["repetitions"]),
                sweep=SweepConfig(**payload["sweep"]),
                power=PowerLawParams(
                    reference_dbm_at_1m=payload["power"]["reference_dbm_at_1m"],
                    decay_exponent=payload["power"]["decay_exponent"],
                    shadowing_sigma_db=payload["power"]["shadowing_sigma_db"],
                    extra_loss_db=dict(payload["power"]["extra_loss_db"]),
                    extra_loss_sigma_db=dict(payload["power"]["extra_loss_sigma_db"]),
                    first_path_floor_dbm=payload["power"]["first_path_floor_dbm"],
                    last_path_floor_dbm=payload["power"]["last_path_floor_dbm"],
                ),
                multipath=MultipathParams(
                    mid_tap_count=tuple(payload["multipath"]["mid_tap_count"]),
                    power_decay_ns=tuple(payload["multipath"]["power_decay_ns"]),
                    max_excess_ns_los=tuple(payload["multipath"]["max_excess_ns_los"]),
                    max_excess_ns_nlos=tuple(payload["multipath"]["max_excess_ns_nlos"]),
                ),
                rise_time=RiseTimeParams(**payload["rise_time"]),
                los_bias=LosBiasParams(**payload["los_bias"]),
                nlos_bias=NlosBiasParams(
                    poly=tuple(nb["poly"]),
                    sigma_m=nb["sigma_m"],
                    sigma_cap_m=nb.get("sigma_cap_m", 2.5),
                    cluster_offsets_m=tuple(nb["cluster_offsets_m"])
                    if nb.get("cluster_offsets_m") is not None
                    else None,
                    cluster_weights=tuple(nb["cluster_weights"])
                    if nb.get("cluster_weights") is not None
                    else None,
                ),
                noise=None if noise is None else NoiseParams(**noise),
                seed=int(payload["seed"]),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise InvalidProfileError(f"malformed profile payload: {exc}") from exc


def default_tunnel_profile(seed: int = 5550123) -> SynthProfile:
    """Reference tunnel campaign profile; the package defaults in one call."""
    return SynthProfile(seed=seed)


def mine_tunnel_profile(seed: int = 2718281) -> SynthProfile:
    """Mine-flavored variant: narrower band, rise times that overlap far
    more across classes.  Intended for robustness experiments only."""
    return SynthProfile(
        sweep=SweepConfig(center_frequency_hz=2.45e9, bandwidth_hz=0.5e9, num_points=1501),
        rise_time=RiseTimeParams(rate_los_per_ns=0.12, rate_nlos_per_ns=0.08),
        multipath=MultipathParams(
            mid_tap_count=(4, 12),
            power_decay_ns=(4.0, 15.0),
            max_excess_ns_los=(10.0, 60.0),
            max_excess_ns_nlos=(8.0, 50.0),
        ),
        nlos_bias=NlosBiasParams(poly=(0.004, -0.5, 16.0), sigma_m=2.0),
        seed=seed,
    )


def _draw_noise_taps(rng: np.random.Generator, n: int, noise: NoiseParams) -> np.ndarray:
    # Inverse-CDF sampling of the upper-truncated Gaussian keeps the ceiling
    # strict while remaining a single vectorized draw.
    u = rng.random(n)
    level_dbm = noise.mean_dbm + noise.sigma_db * ndtri(u * ndtr(noise.cap_sigma))
    with np.errstate(over="ignore"):
        amplitude = np.sqrt(np.power(10.0, level_dbm / 10.0))
    phase = rng.uniform(0.0, 2.0 * np.pi, n)
    return amplitude * np.exp(1j * phase)


def _generate_record(
    profile: SynthProfile,
    rng: np.random.Generator,
    record_id: str,
    tx_id: str,
    rx_id: str,
    scenario: str,
    distance_m: float,
    nlos_residual_scale: float,
) -> SweepRecord:
    sweep = profile.sweep
    dt_ns = sweep.time_resolution_s * 1e9
    n = sweep.num_points
    taps = np.zeros(n, dtype=np.complex128)

    if profile.power.reference_dbm_at_1m is not None:
        nlos = is_nlos_class(scenario)
        mp = profile.multipath
        rate = (
            profile.rise_time.rate_nlos_per_ns if nlos else profile.rise_time.rate_los_per_ns
        )
        rise_ns = rng.exponential(1.0 / rate)
        bins_rise = int(round(rise_ns / dt_ns))
        span = mp.max_excess_ns_nlos if nlos else mp.max_excess_ns_los
        bins_max = int(round(rng.uniform(span[0], span[1]) / dt_ns))
        # Never let the dominant reflection overrun the detected support.
        bins_max = max(bins_max, bins_rise)

        if nlos:
            curve = float(profile.nlos_bias.curve_m(bins_max * dt_ns))
            error_m = curve
            sigma = float(profile.nlos_bias.residual_sigma_m(curve, nlos_residual_scale))
            if sigma > 0.0:
                # Centered Gaussian truncated at -curve keeps the total error
                # (and hence the detected arrival) essentially non-negative.
                a = -curve / sigma
                lo = ndtr(a)
                z = ndtri(lo + rng.random() * (1.0 - lo))
                error_m += sigma * (z - _phi(a) / (1.0 - lo))
            if profile.nlos_bias.cluster_offsets_m is not None:
                idx = rng.choice(
                    len(profile.nlos_bias.cluster_offsets_m),
                    p=profile.nlos_bias.cluster_weights,
                )
                error_m += profile.nlos_bias.cluster_offsets_m[idx]
        else:
            error_m = rng.normal(profile.los_bias.mean_m, profile.los_bias.sigma_m)

        first_bin = int(round((distance_m + error_m) / SPEED_OF_LIGHT_M_PER_NS / dt_ns))
        if first_bin < 1:
            raise InvalidProfileError(
                f"{record_id}: drawn range error places the first path before the grid"
            )
        if first_bin + bins_max >= n:
            raise InvalidProfileError(
                f"{record_id}: multipath extends past the observation window"
            )

        base_dbm = (
            profile.power.reference_dbm_at_1m
            - 10.0 * profile.power.decay_exponent * math.log10(max(distance_m, 1.0))
            - rng.normal(
                profile.power.extra_loss_db.get(scenario, 0.0),
                profile.power.extra_loss_sigma_db.get(scenario, 0.0),
            )
            + rng.normal(0.0, profile.power.shadowing_sigma_db)
        )
        p_first = max(base_dbm, profile.power.first_path_floor_dbm)
        p_peak = p_first + rng.uniform(1.0, 3.0) if bins_rise > 0 else p_first

        bins = [0]
        powers = [p_first]
        if bins_rise > 0:
            bins.append(bins_rise)
            powers.append(p_peak)
        if bins_max > 0 and bins_max != bins_rise:
            p_last = max(p_first - rng.uniform(2.0, 6.0), profile.power.last_path_floor_dbm)
            bins.append(bins_max)
            powers.append(p_last)

        if bins_max >= 2:
            lo, hi = mp.mid_tap_count
            n_mid = int(rng.integers(lo, hi + 1)) if hi > 0 else 0
            if n_mid > 0:
                decay_ns = rng.uniform(*mp.power_decay_ns)
                mid_bins = np.unique(rng.integers(1, bins_max, size=n_mid))
                mid_bins = mid_bins[mid_bins != bins_rise]
                if mid_bins.size:
                    mid_powers = (
                        p_first
                        - 1.0
                        - _DB_PER_NEPER * (mid_bins * dt_ns) / decay_ns
                        + rng.normal(0.0, 2.0, mid_bins.size)
                    )
                    mid_powers = np.clip(mid_powers, -60.0, p_peak - 2.0)
                    bins.extend(int(b) for b in mid_bins)
                    powers.extend(float(p) for p in mid_powers)

        amp = np.sqrt(np.power(10.0, np.asarray(powers) / 10.0))
        phase = rng.uniform(0.0, 2.0 * np.pi, len(bins))
        np.add.at(taps, first_bin + np.asarray(bins, dtype=np.intp), amp * np.exp(1j * phase))

    if profile.noise is not None:
        taps += _draw_noise_taps(rng, n, profile.noise)

    cir = ImpulseResponse(taps=taps, delay_step_s=sweep.time_resolution_s)
    return SweepRecord(
        record_id=record_id,
        cir=cir,
        tx_id=tx_id,
        rx_id=rx_id,
        true_distance_m=distance_m,
        scenario=scenario,
    )


def generate_campaign(profile: SynthProfile) -> list[SweepRecord]:
    """Synthesize every record of the campaign, deterministically in the seed.

    Iteration order is scenario, then transmitter, receiver, repetition; each
    record draws from its own child generator so the campaign could be
    produced in parallel without changing a single sample.
    """
    root = np.random.SeedSequence(profile.seed)
    children = root.spawn(profile.num_records())
    residual_scale = profile.nlos_bias.residual_scale(profile.multipath.max_excess_ns_nlos)
    records: list[SweepRecord] = []
    index = 0
    for scenario in SCENARIOS:
        reps = profile.repetitions.get(scenario, 0)
        for ti, tx in enumerate(profile.tx_positions_m):
            for ri, rx in enumerate(profile.rx_positions_m):
                distance = math.hypot(rx[0] - tx[0], rx[1] - tx[1])
                for rep in range(reps):
                    rng = np.random.Generator(np.random.PCG64(children[index]))
                    index += 1
                    records.append(
                        _generate_record(
                            profile,
                            rng,
                            record_id=f"{scenario.lower()}_tx{ti}_rx{ri:02d}_{rep:02d}",
                            tx_id=f"tx{ti}",
                            rx_id=f"rx{ri:02d}",
                            scenario=scenario,
                            distance_m=distance,
                            nlos_residual_scale=residual_scale,
                        )
                    )
    return records


@dataclass(frozen=True)
class ProfileCheck:
    """One verification row; ``passed`` is None for informational values."""

    name: str
    measured: float
    target_lo: float | None = None
    target_hi: float | None = None
    passed: bool | None = None


@dataclass(frozen=True)
class ProfileReport:
    checks: tuple[ProfileCheck, ...]
    n_records: int
    n_detected: int

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)

    def check(self, name: str) -> ProfileCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            if c.passed is None:
                out.append(f"info {c.name}: {c.measured:.6g}")
            else:
                verdict = "pass" if c.passed else "FAIL"
                out.append(
                    f"{verdict} {c.name}: {c.measured:.6g} "
                    f"(target [{c.target_lo:.6g}, {c.target_hi:.6g}])"
                )
        return out


def _band_check(name: str, measured: float, lo: float, hi: float) -> ProfileCheck:
    return ProfileCheck(name, float(measured), lo, hi, bool(lo <= measured <= hi))


def _relative_band(name: str, measured: float, target: float, tol: float) -> ProfileCheck:
    lo, hi = sorted((target * (1 - tol), target * (1 + tol)))
    return _band_check(name, measured, lo, hi)


def verify_profile(
    records: list[SweepRecord],
    profile: SynthProfile,
    threshold_dbm: float = DEFAULT_THRESHOLD_DBM,
) -> ProfileReport:
    """Compare extracted statistics of a generated campaign with its targets."""
    table, skipped = extract_feature_table(records, threshold_dbm)
    checks: list[ProfileCheck] = []
    n_records = len(records)
    md_rate = len(skipped) / n_records if n_records else 0.0
    signal_on = profile.power.reference_dbm_at_1m is not None
    if signal_on:
        checks.append(_band_check("missed_detection_rate", md_rate, 0.0, 0.02))
    else:
        checks.append(_band_check("missed_detection_rate", md_rate, 0.98, 1.0))

    if len(table):
        nlos = table.nlos_mask()
        los = ~nlos
        errors = table.ranging_error_m()
        rise = table.column("rise_ns")

        if los.any():
            checks.append(
                _relative_band(
                    "los_rise_mean_ns",
                    float(rise[los].mean()),
                    1.0 / profile.rise_time.rate_los_per_ns,
                    0.15,
                )
            )
            mean_err = float(errors[los].mean())
            checks.append(
                _band_check(
                    "los_error_mean_m",
                    mean_err,
                    profile.los_bias.mean_m - 0.15,
                    profile.los_bias.mean_m + 0.15,
                )
            )
        for scenario in (SCENARIO_NLOS_METAL, SCENARIO_NLOS_PERSON):
            rows = np.array([s == scenario for s in table.scenarios], dtype=bool)
            if rows.any():
                checks.append(
                    _band_check(
                        f"soft_{scenario.lower().replace('-', '_')}_error_mean_m",
                        float(errors[rows].mean()),
                        -0.5,
                        0.5,
                    )
                )
        if nlos.any():
            checks.append(
                _relative_band(
                    "nlos_rise_mean_ns",
                    float(rise[nlos].mean()),
                    1.0 / profile.rise_time.rate_nlos_per_ns,
                    0.15,
                )
            )
            span = profile.multipath.max_excess_ns_nlos
            curve = profile.nlos_bias.curve_m(np.linspace(span[0], span[1], 4096))
            expected_std = math.hypot(float(curve.std()), profile.nlos_bias.sigma_m)
            checks.append(
                _relative_band(
                    "nlos_error_std_m", float(errors[nlos].std(ddof=1)), expected_std, 0.20
                )
            )
            residual = errors[nlos] - profile.nlos_bias.curve_m(
                table.column("max_excess_ns")[nlos]
            )
            checks.append(
                _relative_band(
                    "nlos_residual_std_m",
                    float(residual.std(ddof=1)),
                    profile.nlos_bias.sigma_m,
                    0.15,
                )
            )
        if los.any() and nlos.any():
            mu_l, mu_n = float(rise[los].mean()), float(rise[nlos].mean())
            if mu_l != mu_n:
                xi = math.sqrt(rise[los].std(ddof=1) * rise[nlos].std(ddof=1)) / abs(
                    mu_n - mu_l
                )
                checks.append(ProfileCheck("rise_time_overlap", float(xi)))

    if profile.noise is not None and signal_on:
        subset = noise_estimation_subset(records)
        if subset:
            stats = estimate_noise_stats(subset)
            checks.append(
                _band_check(
                    "noise_mean_dbm",
                    stats.mean_dbm,
                    profile.noise.mean_dbm - 0.5,
                    profile.noise.mean_dbm + 0.5,
                )
            )
            checks.append(
                _band_check(
                    "noise_sigma_db",
                    stats.sigma_db,
                    profile.noise.sigma_db - 0.5,
                    profile.noise.sigma_db + 0.5,
                )
            )

    return ProfileReport(
        checks=tuple(checks), n_records=n_records, n_detected=n_records - len(skipped)
    )
