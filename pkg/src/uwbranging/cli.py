"""Command-line interface.

Subcommands: simulate, features, tune-threshold, analyze-features, fit,
classify, range-likelihood, run-all.  Exit codes: 0 success, 2 input error,
3 when every record is a missed detection, 4 when the model fit fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import (
    fmt_float,
    load_manifest,
    load_records,
    read_feature_table,
    save_campaign,
    write_csv,
    write_feature_table,
)
from .exceptions import (
    DegenerateFitError,
    InsufficientDataError,
    PipelineAbortedError,
    UwbRangingError,
)
from .features import extract_feature_table
from .pipeline import RunConfig, run_pipeline
from .processing import DEFAULT_THRESHOLD_DBM
from .ranging import RangingModel, features_from_table_row, fit_ranging_model
from .synth import SynthProfile, generate_campaign, default_tunnel_profile
from .threshold import estimate_noise_stats, noise_estimation_subset, sweep_thresholds

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_MD_ALL = 3
EXIT_FIT_FAILURE = 4


def _cmd_simulate(args) -> int:
    if args.profile is not None:
        profile = SynthProfile.from_dict(json.loads(Path(args.profile).read_text()))
    else:
        profile = default_tunnel_profile()
    if args.seed is not None:
        payload = profile.to_dict()
        payload["seed"] = args.seed
        profile = SynthProfile.from_dict(payload)
    records = generate_campaign(profile)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "profile.json").write_text(
        json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    manifest_path = save_campaign(records, profile.sweep, out_dir)
    print(f"wrote {len(records)} records to {manifest_path}")
    return EXIT_OK


def _cmd_features(args) -> int:
    manifest = load_manifest(args.manifest)
    records = load_records(manifest)
    table, skipped = extract_feature_table(
        records, args.threshold_dbm, manifest.sweep_config.reference_power_mw
    )
    write_feature_table(table, args.out)
    for rid, reason in skipped:
        print(f"skipped {rid}: {reason}", file=sys.stderr)
    print(f"wrote {len(table)} feature rows to {args.out} ({len(skipped)} skipped)")
    return EXIT_OK


def _cmd_tune_threshold(args) -> int:
    manifest = load_manifest(args.manifest)
    records = [r for r in load_records(manifest) if r.true_distance_m is not None]
    step = args.step_db
    n = int(round((args.max_dbm - args.min_dbm) / step))
    candidates = args.min_dbm + step * np.arange(n + 1)
    curve = sweep_thresholds(
        records,
        candidates,
        fa_guard_s=args.fa_guard_ns * 1e-9,
        reference_power_mw=manifest.sweep_config.reference_power_mw,
    )
    print("threshold_dbm,fa_rate,md_rate")
    for t, f, m in zip(curve.thresholds_dbm, curve.fa_rate, curve.md_rate):
        print(f"{fmt_float(t)},{fmt_float(f)},{fmt_float(m)}")
    trailer = f"# selected_dbm={fmt_float(curve.selected_dbm)}"
    subset = noise_estimation_subset(records)
    if subset:
        try:
            stats = estimate_noise_stats(subset)
            trailer += f" sigma_multiple={fmt_float(stats.sigma_multiple(curve.selected_dbm))}"
        except UwbRangingError:
            pass
    print(trailer)
    return EXIT_OK


def _cmd_analyze_features(args) -> int:
    from .pipeline import write_diagnostics_artifacts

    table = read_feature_table(args.features)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = write_diagnostics_artifacts(out_dir, table)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_fit(args) -> int:
    table = read_feature_table(args.features)
    model = fit_ranging_model(table, prior_nlos=args.prior_nlos)
    model.save(args.out)
    print(f"wrote model to {args.out}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    model = RangingModel.load(args.model)
    table = read_feature_table(args.features)
    rows = []
    for i, rid in enumerate(table.record_ids):
        feats = features_from_table_row(table, i)
        distance, label = model.point_estimate(feats)
        posterior = float(model.posterior_nlos(feats.rise_time_ns))
        rows.append([rid, fmt_float(posterior), label, fmt_float(distance)])
    if args.out:
        write_csv(args.out, ("record_id", "posterior_nlos", "class", "d_hat_m"), rows)
        print(f"wrote {len(rows)} classifications to {args.out}")
    else:
        print("record_id,posterior_nlos,class,d_hat_m")
        for row in rows:
            print(",".join(row))
    return EXIT_OK


def _cmd_range_likelihood(args) -> int:
    model = RangingModel.load(args.model)
    table = read_feature_table(args.features)
    if args.record_id is not None:
        try:
            index = table.record_ids.index(args.record_id)
        except ValueError:
            raise UwbRangingError(f"record_id {args.record_id!r} not in feature table")
    elif len(table) == 1:
        index = 0
    else:
        raise UwbRangingError("feature table has several rows; pass --record-id")
    mixture = model.range_likelihood(features_from_table_row(table, index))
    n = int(round((args.grid_max_m - args.grid_min_m) / args.grid_step_m))
    grid = args.grid_min_m + args.grid_step_m * np.arange(n + 1)
    density = mixture.density(grid)
    print("d_m,density")
    for d, v in zip(grid, density):
        print(f"{fmt_float(d)},{fmt_float(v)}")
    return EXIT_OK


def _cmd_run_all(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.config is not None:
        config = RunConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        config = RunConfig()
    if args.seed is not None:
        payload = config.to_dict()
        payload["seed"] = args.seed
        config = RunConfig.from_dict(payload)
    result = run_pipeline(manifest, config, args.out_dir)
    print(f"run complete; artifacts in {result.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwbranging",
        description=(
            "TOA ranging from UWB channel soundings, with soft LOS/NLOS "
            "identification, NLOS error mitigation, and a synthetic tunnel "
            "channel generator."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic campaign")
    p.add_argument("--profile", help="profile JSON (defaults to the bundled tunnel profile)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, help="override the profile seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("features", help="extract the per-record feature table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--threshold-dbm", type=float, default=DEFAULT_THRESHOLD_DBM)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("tune-threshold", help="sweep detection thresholds (FA/MD trade-off)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--min-dbm", type=float, default=-60.0)
    p.add_argument("--max-dbm", type=float, default=-30.0)
    p.add_argument("--step-db", type=float, default=0.5)
    p.add_argument("--fa-guard-ns", type=float, default=3.0)
    p.set_defaults(func=_cmd_tune_threshold)

    p = sub.add_parser("analyze-features", help="overlap/correlation diagnostics")
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_analyze_features)

    p = sub.add_parser("fit", help="fit the ranging model from a labeled feature table")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--prior-nlos", type=float, default=0.25)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("classify", help="per-record posterior, class, and range estimate")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("range-likelihood", help="mixture density over a distance grid")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--record-id")
    p.add_argument("--grid-min-m", type=float, default=0.0)
    p.add_argument("--grid-max-m", type=float, default=50.0)
    p.add_argument("--grid-step-m", type=float, default=0.05)
    p.set_defaults(func=_cmd_range_likelihood)

    p = sub.add_parser("run-all", help="full pipeline: features to likelihood grids")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=_cmd_run_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineAbortedError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_MD_ALL if exc.code == "MD_ALL" else EXIT_FIT_FAILURE
    except (InsufficientDataError, DegenerateFitError) as exc:
        print(f"error [fit]: {exc}", file=sys.stderr)
        return EXIT_FIT_FAILURE
    except (UwbRangingError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
