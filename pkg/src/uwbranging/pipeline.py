"""End-to-end runs: features, threshold curve, diagnostics, model, likelihoods.

Every artifact is plain CSV or JSON, and a run is a pure function of
(inputs, configuration, seed): no timestamps or machine identifiers are
written, so identical runs produce byte-identical output trees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import (
    DatasetManifest,
    fmt_float,
    load_records,
    write_csv,
    write_feature_table,
)
from .diagnostics import build_diagnostics
from .exceptions import (
    DegenerateFitError,
    InsufficientDataError,
    InvalidInputError,
    PipelineAbortedError,
    UwbRangingError,
)
from .features import FEATURE_COLUMNS, FeatureTable, extract_feature_table
from .processing import DEFAULT_THRESHOLD_DBM, SPEED_OF_LIGHT_M_PER_NS, SweepRecord
from .ranging import RangingModel, features_from_table_row, fit_ranging_model
from .threshold import (
    NoiseStats,
    estimate_noise_stats,
    noise_estimation_subset,
    sweep_thresholds,
)


@dataclass(frozen=True)
class RunConfig:
    """Knobs of an end-to-end run."""

    threshold_dbm: float = DEFAULT_THRESHOLD_DBM
    fa_guard_ns: float = 3.0
    prior_nlos: float = 0.25
    candidate_min_dbm: float = -60.0
    candidate_max_dbm: float = -30.0
    candidate_step_db: float = 0.5
    likelihood_min_m: float = 0.0
    likelihood_max_m: float = 50.0
    likelihood_step_m: float = 0.25
    error_hist_bin_m: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.prior_nlos <= 1.0:
            raise InvalidInputError("prior_nlos must lie in [0, 1]")
        if self.candidate_step_db <= 0 or self.candidate_max_dbm < self.candidate_min_dbm:
            raise InvalidInputError("candidate grid must be non-empty with positive step")
        if self.likelihood_step_m <= 0 or self.likelihood_max_m <= self.likelihood_min_m:
            raise InvalidInputError("likelihood grid must be non-empty with positive step")
        if self.error_hist_bin_m <= 0:
            raise InvalidInputError("histogram bin width must be positive")

    def candidates_dbm(self) -> np.ndarray:
        n = int(round((self.candidate_max_dbm - self.candidate_min_dbm) / self.candidate_step_db))
        return self.candidate_min_dbm + self.candidate_step_db * np.arange(n + 1)

    def likelihood_grid_m(self) -> np.ndarray:
        n = int(round((self.likelihood_max_m - self.likelihood_min_m) / self.likelihood_step_m))
        return self.likelihood_min_m + self.likelihood_step_m * np.arange(n + 1)

    def to_dict(self) -> dict:
        return {
            "threshold_dbm": self.threshold_dbm,
            "fa_guard_ns": self.fa_guard_ns,
            "prior_nlos": self.prior_nlos,
            "candidate_min_dbm": self.candidate_min_dbm,
            "candidate_max_dbm": self.candidate_max_dbm,
            "candidate_step_db": self.candidate_step_db,
            "likelihood_min_m": self.likelihood_min_m,
            "likelihood_max_m": self.likelihood_max_m,
            "likelihood_step_m": self.likelihood_step_m,
            "error_hist_bin_m": self.error_hist_bin_m,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        try:
            return cls(**payload)
        except TypeError as exc:
            raise InvalidInputError(f"malformed run config: {exc}") from exc


@dataclass
class RunResult:
    out_dir: Path
    summary: dict
    model: RangingModel | None


def _histogram_rows(values: np.ndarray, bin_width: float) -> list[list[float]]:
    if values.size == 0:
        return []
    lo = np.floor(values.min() / bin_width) * bin_width
    hi = np.ceil(values.max() / bin_width) * bin_width
    if hi <= lo:
        hi = lo + bin_width
    edges = lo + bin_width * np.arange(int(round((hi - lo) / bin_width)) + 1)
    counts, _ = np.histogram(values, bins=edges)
    return [
        [float(edges[i]), float(edges[i + 1]), int(counts[i])] for i in range(counts.size)
    ]


def _write_histogram(path: Path, values: np.ndarray, bin_width: float) -> None:
    rows = [
        [fmt_float(a), fmt_float(b), str(c)] for a, b, c in _histogram_rows(values, bin_width)
    ]
    write_csv(path, ("bin_left", "bin_right", "count"), rows)


def write_diagnostics_artifacts(out_dir: Path, table: FeatureTable) -> dict:
    diag = build_diagnostics(table)
    names = diag.feature_names
    write_csv(
        out_dir / "diagnostics_overlap.csv",
        ("feature", "overlap"),
        [[n, fmt_float(v)] for n, v in zip(names, diag.overlap)],
    )
    write_csv(
        out_dir / "diagnostics_corr_distance.csv",
        ("feature", "corr_distance"),
        [[n, fmt_float(v)] for n, v in zip(names, diag.corr_distance)],
    )
    write_csv(
        out_dir / "diagnostics_corr_nlos_error.csv",
        ("feature", "corr_nlos_error"),
        [[n, fmt_float(v)] for n, v in zip(names, diag.corr_nlos_error)],
    )
    write_csv(
        out_dir / "diagnostics_corr_pairs.csv",
        ("feature",) + names,
        [[n] + [fmt_float(v) for v in diag.corr_pairs[i]] for i, n in enumerate(names)],
    )
    summary = {
        "n_los": diag.n_los,
        "n_nlos": diag.n_nlos,
        "overlap": {n: _json_float(v) for n, v in zip(names, diag.overlap)},
        "corr_distance": {n: _json_float(v) for n, v in zip(names, diag.corr_distance)},
        "corr_nlos_error": {n: _json_float(v) for n, v in zip(names, diag.corr_nlos_error)},
        "undefined": [list(pair) for pair in diag.undefined],
    }
    (out_dir / "diagnostics.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return summary


def _json_float(v: float):
    return None if not np.isfinite(v) else float(v)


def _write_plot_data(
    out_dir: Path, table: FeatureTable, model: RangingModel, config: RunConfig,
    noise_db_samples: np.ndarray | None,
) -> None:
    plots = out_dir / "plots"
    plots.mkdir(exist_ok=True)
    labeled = table.labeled_mask()
    nlos = table.nlos_mask()
    errors = table.ranging_error_m()

    rows = []
    for i in np.flatnonzero(labeled):
        rows.append(
            [
                table.record_ids[i],
                "NLOS" if nlos[i] else "LOS",
                fmt_float(table.true_distance_m[i]),
                fmt_float(SPEED_OF_LIGHT_M_PER_NS * table.matrix[i, 0]),
            ]
        )
    write_csv(
        plots / "toa_vs_distance.csv",
        ("record_id", "class", "true_distance_m", "ctoa_m"),
        rows,
    )

    _write_histogram(plots / "error_hist_los.csv", errors[labeled & ~nlos], config.error_hist_bin_m)
    _write_histogram(plots / "error_hist_nlos.csv", errors[labeled & nlos], config.error_hist_bin_m)
    _write_histogram(plots / "error_hist_all.csv", errors[labeled], config.error_hist_bin_m)

    rows = []
    for i in np.flatnonzero(labeled):
        rows.append(
            [
                table.record_ids[i],
                "NLOS" if nlos[i] else "LOS",
                fmt_float(table.true_distance_m[i]),
                fmt_float(table.matrix[i, FEATURE_COLUMNS.index("rss_dbm")]),
                fmt_float(table.matrix[i, FEATURE_COLUMNS.index("mean_excess_ns")]),
                fmt_float(table.matrix[i, FEATURE_COLUMNS.index("rise_ns")]),
            ]
        )
    write_csv(
        plots / "feature_vs_distance.csv",
        ("record_id", "class", "true_distance_m", "rss_dbm", "mean_excess_ns", "rise_ns"),
        rows,
    )

    nlos_rows = np.flatnonzero(labeled & nlos)
    write_csv(
        plots / "nlos_error_vs_max_excess.csv",
        ("record_id", "max_excess_ns", "error_m"),
        [
            [
                table.record_ids[i],
                fmt_float(table.matrix[i, FEATURE_COLUMNS.index("max_excess_ns")]),
                fmt_float(errors[i]),
            ]
            for i in nlos_rows
        ],
    )

    before = errors[labeled & nlos]
    after = before - np.asarray(
        model.nlos_error_m(table.column("max_excess_ns")[labeled & nlos]), dtype=np.float64
    )
    _write_histogram(plots / "mitigation_hist_before.csv", before, config.error_hist_bin_m)
    _write_histogram(plots / "mitigation_hist_after.csv", after, config.error_hist_bin_m)

    if noise_db_samples is not None and noise_db_samples.size:
        _write_histogram(plots / "noise_hist.csv", noise_db_samples, 1.0)

    # A canonical bimodal example: 30 ns arrival, 60 ns max excess delay,
    # likelihood sweeps over a grid of fixed posteriors.
    grid = config.likelihood_grid_m()
    posteriors = (0.0, 0.25, 0.5, 0.75, 1.0)
    ctoa = SPEED_OF_LIGHT_M_PER_NS * 30.0
    means = (ctoa - model.los_bias_m, ctoa - model.nlos_error_m(60.0))
    header = ["d_m"] + [f"density_p{int(100 * p):03d}" for p in posteriors]
    rows = []
    for d in grid:
        row = [fmt_float(d)]
        for p in posteriors:
            dens = (1 - p) * _gauss(d, means[0], model.sigma_los_m) + p * _gauss(
                d, means[1], model.sigma_nlos_m
            )
            row.append(fmt_float(dens))
        rows.append(row)
    write_csv(plots / "likelihood_curves.csv", header, rows)


def _gauss(x: float, mean: float, std: float) -> float:
    return float(np.exp(-0.5 * ((x - mean) / std) ** 2) / (std * np.sqrt(2.0 * np.pi)))


def _pre_arrival_db_samples(records: list[SweepRecord], guard_s: float) -> np.ndarray:
    pooled = []
    for rec in noise_estimation_subset(records, guard_s):
        power = rec.cir.power_mw()
        toa = rec.true_toa_s
        n_pre = int(np.ceil((toa - guard_s - rec.cir.origin_delay_s) / rec.cir.delay_step_s - 1e-12))
        with np.errstate(divide="ignore"):
            level = 10.0 * np.log10(power[:n_pre])
        pooled.append(level[np.isfinite(level)])
    return np.concatenate(pooled) if pooled else np.empty(0)


def run_pipeline(manifest: DatasetManifest, config: RunConfig, out_dir) -> RunResult:
    """Run the full chain and write every artifact under ``out_dir``.

    Raises PipelineAbortedError with code ``MD_ALL`` when no record yields a
    detection at the configured threshold, and with code ``FIT_FAILURE`` when
    the model cannot be fitted from the detected records.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = load_records(manifest)

    table, skipped = extract_feature_table(
        records, config.threshold_dbm, manifest.sweep_config.reference_power_mw
    )
    write_feature_table(table, out_dir / "features.csv")
    write_csv(
        out_dir / "skipped_records.csv",
        ("record_id", "reason"),
        [[rid, reason] for rid, reason in skipped],
    )

    summary: dict = {
        "config": config.to_dict(),
        "versions": _versions(),
        "n_records": len(records),
        "n_detected": len(table),
        "n_skipped": len(skipped),
        "missed_detection_rate": len(skipped) / len(records) if records else 0.0,
        "error_hist_bin_m": config.error_hist_bin_m,
    }

    if len(table) == 0:
        summary["status"] = "MD_ALL"
        _write_summary(out_dir, summary)
        raise PipelineAbortedError(
            "MD_ALL", "every record was a missed detection at the configured threshold"
        )

    labeled_records = [r for r in records if r.true_distance_m is not None]
    guard_s = config.fa_guard_ns * 1e-9
    noise_samples = None
    if labeled_records:
        curve = sweep_thresholds(
            labeled_records,
            config.candidates_dbm(),
            fa_guard_s=guard_s,
            reference_power_mw=manifest.sweep_config.reference_power_mw,
        )
        write_csv(
            out_dir / "threshold_curve.csv",
            ("threshold_dbm", "fa_rate", "md_rate"),
            [
                [fmt_float(t), fmt_float(f), fmt_float(m)]
                for t, f, m in zip(curve.thresholds_dbm, curve.fa_rate, curve.md_rate)
            ],
        )
        summary["selected_threshold_dbm"] = curve.selected_dbm
        noise_stats = _try_noise_stats(labeled_records)
        if noise_stats is not None:
            summary["noise_mean_dbm"] = noise_stats.mean_dbm
            summary["noise_sigma_db"] = noise_stats.sigma_db
            summary["selected_threshold_sigma_multiple"] = noise_stats.sigma_multiple(
                curve.selected_dbm
            )
            noise_samples = _pre_arrival_db_samples(labeled_records, 5e-9)

    try:
        summary["diagnostics"] = write_diagnostics_artifacts(out_dir, table)
        model = fit_ranging_model(table, prior_nlos=config.prior_nlos)
    except (InsufficientDataError, DegenerateFitError) as exc:
        summary["status"] = "FIT_FAILURE"
        summary["fit_error"] = str(exc)
        _write_summary(out_dir, summary)
        raise PipelineAbortedError("FIT_FAILURE", str(exc)) from exc

    model.save(out_dir / "model.json")
    summary["model"] = model.to_dict()

    rows = []
    grid = config.likelihood_grid_m()
    likelihood_rows = []
    for i, rid in enumerate(table.record_ids):
        feats = features_from_table_row(table, i)
        distance, label = model.point_estimate(feats)
        posterior = float(model.posterior_nlos(feats.rise_time_ns))
        truth = table.true_distance_m[i]
        rows.append(
            [
                rid,
                fmt_float(posterior),
                label,
                fmt_float(distance),
                "" if np.isnan(truth) else fmt_float(truth),
            ]
        )
        mixture = model.range_likelihood(feats)
        density = mixture.density(grid)
        likelihood_rows.extend(
            [rid, fmt_float(d), fmt_float(v)] for d, v in zip(grid, density)
        )
    write_csv(
        out_dir / "classification.csv",
        ("record_id", "posterior_nlos", "class", "d_hat_m", "true_distance_m"),
        rows,
    )
    write_csv(out_dir / "likelihoods.csv", ("record_id", "d_m", "density"), likelihood_rows)

    _write_plot_data(out_dir, table, model, config, noise_samples)

    summary["status"] = "ok"
    _write_summary(out_dir, summary)
    return RunResult(out_dir=out_dir, summary=summary, model=model)


def _try_noise_stats(records: list[SweepRecord]) -> NoiseStats | None:
    subset = noise_estimation_subset(records)
    if not subset:
        return None
    try:
        return estimate_noise_stats(subset)
    except UwbRangingError:
        return None


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"uwbranging": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _write_summary(out_dir: Path, summary: dict) -> None:
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
