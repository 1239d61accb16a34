"""File formats: dataset manifests (JSON lines), CIR files (CSV + JSON sidecar),
and the feature-table CSV.

All numbers are written as plain locale-independent decimals with '.' as the
separator; floats use ``repr`` so values round-trip exactly and re-serializing
a loaded manifest reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ManifestError
from .features import FEATURE_COLUMNS, FeatureTable
from .processing import (
    SCENARIOS,
    FrequencyResponse,
    ImpulseResponse,
    SweepConfig,
    SweepRecord,
    ingest_frequency_response,
)

DOMAIN_TIME = "time"
DOMAIN_FREQUENCY = "frequency"

FEATURE_TABLE_HEADER = ("record_id", "scenario", "true_distance_m") + FEATURE_COLUMNS


def fmt_float(x) -> str:
    """Shortest exact decimal representation of a float."""
    return repr(float(x))


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, str) else fmt_float(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ManifestEntry:
    record_id: str
    tx_id: str
    rx_id: str
    true_distance_m: float | None
    scenario: str | None
    cir_path: str
    domain: str


@dataclass(frozen=True)
class DatasetManifest:
    sweep_config: SweepConfig
    entries: tuple[ManifestEntry, ...]
    base_dir: Path

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.base_dir / entry.cir_path


def _sweep_config_dict(config: SweepConfig) -> dict:
    return {
        "type": "sweep_config",
        "center_frequency_hz": config.center_frequency_hz,
        "bandwidth_hz": config.bandwidth_hz,
        "num_points": config.num_points,
        "time_resolution_s": config.time_resolution_s,
        "observation_interval_s": config.observation_interval_s,
        "reference_power_mw": config.reference_power_mw,
        "window": config.window,
    }


def _entry_dict(entry: ManifestEntry) -> dict:
    return {
        "type": "record",
        "record_id": entry.record_id,
        "tx_id": entry.tx_id,
        "rx_id": entry.rx_id,
        "true_distance_m": entry.true_distance_m,
        "scenario": entry.scenario,
        "cir_path": entry.cir_path,
        "domain": entry.domain,
    }


def save_manifest(manifest: DatasetManifest, path) -> None:
    lines = [json.dumps(_sweep_config_dict(manifest.sweep_config))]
    lines.extend(json.dumps(_entry_dict(e)) for e in manifest.entries)
    Path(path).write_text("\n".join(lines) + "\n")


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a JSON-lines manifest.

    Checks: unique record ids, referenced files exist, a scenario label is
    present exactly when a true distance is, and domains are known.  Errors
    name the offending record id.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    base_dir = path.parent
    sweep_config: SweepConfig | None = None
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {lineno}: invalid JSON ({exc})") from exc
        kind = payload.get("type")
        if kind == "sweep_config":
            if sweep_config is not None:
                raise ManifestError(f"line {lineno}: duplicate sweep_config")
            cfg = {k: v for k, v in payload.items() if k != "type"}
            try:
                sweep_config = SweepConfig(**cfg)
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"line {lineno}: bad sweep_config ({exc})") from exc
            continue
        if kind != "record":
            raise ManifestError(f"line {lineno}: unknown entry type {kind!r}")
        rid = payload.get("record_id")
        if not rid or not isinstance(rid, str):
            raise ManifestError(f"line {lineno}: missing record_id")
        if rid in seen:
            raise ManifestError(f"duplicate record_id {rid!r}")
        seen.add(rid)
        distance = payload.get("true_distance_m")
        scenario = payload.get("scenario")
        if (distance is None) != (scenario is None):
            raise ManifestError(
                f"{rid}: scenario and true_distance_m must be given together"
            )
        if scenario is not None and scenario not in SCENARIOS:
            raise ManifestError(f"{rid}: unknown scenario {scenario!r}")
        if distance is not None and not distance > 0:
            raise ManifestError(f"{rid}: true_distance_m must be positive")
        domain = payload.get("domain")
        if domain not in (DOMAIN_TIME, DOMAIN_FREQUENCY):
            raise ManifestError(f"{rid}: unknown domain {domain!r}")
        cir_path = payload.get("cir_path")
        if not cir_path:
            raise ManifestError(f"{rid}: missing cir_path")
        if not (base_dir / cir_path).is_file():
            raise ManifestError(f"{rid}: missing CIR file {cir_path}")
        entries.append(
            ManifestEntry(
                record_id=rid,
                tx_id=payload.get("tx_id", ""),
                rx_id=payload.get("rx_id", ""),
                true_distance_m=distance,
                scenario=scenario,
                cir_path=cir_path,
                domain=domain,
            )
        )
    if sweep_config is None:
        raise ManifestError("manifest has no sweep_config line")
    return DatasetManifest(sweep_config=sweep_config, entries=tuple(entries), base_dir=base_dir)


def _read_complex_csv(path: Path, record_id: str) -> np.ndarray:
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "index,re,im":
        raise ManifestError(f"{record_id}: {path.name} must start with 'index,re,im'")
    values = np.empty(len(lines) - 1, dtype=np.complex128)
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != 3:
            raise ManifestError(f"{record_id}: malformed row {i} in {path.name}")
        try:
            values[i] = complex(float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ManifestError(f"{record_id}: malformed row {i} in {path.name}") from exc
    return values


def _write_complex_csv(path: Path, values: np.ndarray) -> None:
    lines = ["index,re,im"]
    lines.extend(
        f"{i},{fmt_float(v.real)},{fmt_float(v.imag)}" for i, v in enumerate(values)
    )
    path.write_text("\n".join(lines) + "\n")


def write_cir_file(path, cir: ImpulseResponse) -> None:
    """Write a time-domain CIR as CSV plus its JSON sidecar."""
    path = Path(path)
    _write_complex_csv(path, cir.taps)
    sidecar = {
        "domain": DOMAIN_TIME,
        "delay_step_s": cir.delay_step_s,
        "origin_delay_s": cir.origin_delay_s,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar) + "\n")


def write_frequency_file(path, response: FrequencyResponse) -> None:
    """Write a frequency sweep as CSV plus a sidecar holding the SweepConfig."""
    path = Path(path)
    _write_complex_csv(path, response.samples)
    sidecar = {"domain": DOMAIN_FREQUENCY}
    sidecar.update(
        {k: v for k, v in _sweep_config_dict(response.config).items() if k != "type"}
    )
    path.with_suffix(".json").write_text(json.dumps(sidecar) + "\n")


def load_record(manifest: DatasetManifest, entry: ManifestEntry) -> SweepRecord:
    """Load one record's response, transforming frequency sweeps to taps."""
    path = manifest.resolve(entry)
    values = _read_complex_csv(path, entry.record_id)
    if entry.domain == DOMAIN_FREQUENCY:
        try:
            response = FrequencyResponse(samples=values, config=manifest.sweep_config)
        except ValueError as exc:
            raise ManifestError(f"{entry.record_id}: {exc}") from exc
        cir = ingest_frequency_response(response)
    else:
        sidecar_path = path.with_suffix(".json")
        delay_step = manifest.sweep_config.time_resolution_s
        origin = 0.0
        if sidecar_path.is_file():
            sidecar = json.loads(sidecar_path.read_text())
            delay_step = float(sidecar.get("delay_step_s", delay_step))
            origin = float(sidecar.get("origin_delay_s", 0.0))
        try:
            cir = ImpulseResponse(taps=values, delay_step_s=delay_step, origin_delay_s=origin)
        except ValueError as exc:
            raise ManifestError(f"{entry.record_id}: {exc}") from exc
    return SweepRecord(
        record_id=entry.record_id,
        cir=cir,
        tx_id=entry.tx_id,
        rx_id=entry.rx_id,
        true_distance_m=entry.true_distance_m,
        scenario=entry.scenario,
    )


def load_records(manifest: DatasetManifest) -> list[SweepRecord]:
    return [load_record(manifest, entry) for entry in manifest.entries]


def save_campaign(records: list[SweepRecord], sweep_config: SweepConfig, out_dir) -> Path:
    """Write per-record CIR files plus the manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    cir_dir = out_dir / "cirs"
    cir_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in records:
        rel = f"cirs/{rec.record_id}.csv"
        write_cir_file(out_dir / rel, rec.cir)
        entries.append(
            ManifestEntry(
                record_id=rec.record_id,
                tx_id=rec.tx_id,
                rx_id=rec.rx_id,
                true_distance_m=rec.true_distance_m,
                scenario=rec.scenario,
                cir_path=rel,
                domain=DOMAIN_TIME,
            )
        )
    manifest = DatasetManifest(
        sweep_config=sweep_config, entries=tuple(entries), base_dir=out_dir
    )
    manifest_path = out_dir / "manifest.jsonl"
    save_manifest(manifest, manifest_path)
    return manifest_path


def write_feature_table(table: FeatureTable, path) -> None:
    rows = []
    for i, rid in enumerate(table.record_ids):
        distance = table.true_distance_m[i]
        rows.append(
            [rid, table.scenarios[i], "" if np.isnan(distance) else fmt_float(distance)]
            + [fmt_float(v) for v in table.matrix[i]]
        )
    write_csv(path, FEATURE_TABLE_HEADER, rows)


def read_feature_table(path) -> FeatureTable:
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != FEATURE_TABLE_HEADER:
        raise ManifestError(f"feature table header mismatch in {path}")
    ids: list[str] = []
    scenarios: list[str] = []
    distances: list[float] = []
    rows: list[list[float]] = []
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != len(FEATURE_TABLE_HEADER):
            raise ManifestError(f"feature table row {i} has {len(parts)} columns")
        ids.append(parts[0])
        scenarios.append(parts[1])
        distances.append(float(parts[2]) if parts[2] else float("nan"))
        rows.append([float(v) for v in parts[3:]])
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(FEATURE_COLUMNS)))
    return FeatureTable(
        record_ids=ids,
        scenarios=scenarios,
        true_distance_m=np.asarray(distances, dtype=np.float64),
        matrix=matrix,
    )
