import json

import numpy as np
import pytest

from uwbranging import ImpulseResponse, SweepConfig, impulse_to_frequency_response
from uwbranging.dataio import (
    DatasetManifest,
    ManifestEntry,
    load_manifest,
    load_records,
    read_feature_table,
    save_campaign,
    save_manifest,
    write_cir_file,
    write_feature_table,
    write_frequency_file,
)
from uwbranging.exceptions import ManifestError
from uwbranging.features import FEATURE_COLUMNS, FeatureTable
from uwbranging.processing import WINDOW_NONE
from uwbranging.synth import SynthProfile, generate_campaign


def tiny_campaign(seed=3):
    profile = SynthProfile(
        tx_positions_m=((0.0, 0.4),),
        rx_positions_m=tuple((3.0 + 3.0 * i, 2.2) for i in range(4)),
        repetitions={"LOS": 2, "NLOS-W": 1},
        seed=seed,
    )
    return profile, generate_campaign(profile)


def test_campaign_manifest_round_trips_byte_identical(tmp_path):
    profile, records = tiny_campaign()
    manifest_path = save_campaign(records, profile.sweep, tmp_path)
    first = manifest_path.read_bytes()
    manifest = load_manifest(manifest_path)
    rewritten = tmp_path / "rewritten.jsonl"
    save_manifest(manifest, rewritten)
    assert rewritten.read_bytes() == first


def test_loaded_records_match_generated_taps(tmp_path):
    profile, records = tiny_campaign()
    manifest_path = save_campaign(records, profile.sweep, tmp_path)
    loaded = load_records(load_manifest(manifest_path))
    assert [r.record_id for r in loaded] == [r.record_id for r in records]
    for a, b in zip(loaded, records):
        assert np.array_equal(a.cir.taps, b.cir.taps)
        assert a.true_distance_m == b.true_distance_m
        assert a.scenario == b.scenario


def test_empty_manifest_is_valid(tmp_path):
    path = tmp_path / "manifest.jsonl"
    config = SweepConfig()
    save_manifest(DatasetManifest(config, (), tmp_path), path)
    manifest = load_manifest(path)
    assert manifest.entries == ()
    assert manifest.sweep_config == config


def test_duplicate_record_id_names_the_offender(tmp_path):
    profile, records = tiny_campaign()
    manifest_path = save_campaign(records, profile.sweep, tmp_path)
    lines = manifest_path.read_text().splitlines()
    lines.append(lines[1])
    manifest_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ManifestError, match=records[0].record_id):
        load_manifest(manifest_path)


def test_missing_cir_file_names_the_record(tmp_path):
    profile, records = tiny_campaign()
    manifest_path = save_campaign(records, profile.sweep, tmp_path)
    victim = tmp_path / "cirs" / f"{records[1].record_id}.csv"
    victim.unlink()
    with pytest.raises(ManifestError, match=records[1].record_id):
        load_manifest(manifest_path)


def test_scenario_without_distance_is_rejected(tmp_path):
    profile, records = tiny_campaign()
    manifest_path = save_campaign(records, profile.sweep, tmp_path)
    lines = manifest_path.read_text().splitlines()
    entry = json.loads(lines[1])
    entry["true_distance_m"] = None
    lines[1] = json.dumps(entry)
    manifest_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ManifestError, match="together"):
        load_manifest(manifest_path)


def test_malformed_row_is_reported(tmp_path):
    profile, records = tiny_campaign()
    manifest_path = save_campaign(records, profile.sweep, tmp_path)
    victim = tmp_path / "cirs" / f"{records[0].record_id}.csv"
    content = victim.read_text().splitlines()
    content[5] = "4,notanumber,0.0"
    victim.write_text("\n".join(content) + "\n")
    with pytest.raises(ManifestError, match=records[0].record_id):
        load_records(load_manifest(manifest_path))


def test_frequency_domain_record_is_ingested_on_load(tmp_path):
    config = SweepConfig(num_points=257, window=WINDOW_NONE)
    rng = np.random.default_rng(4)
    taps = np.zeros(257, complex)
    taps[40] = 1.0
    taps[55] = 0.5
    cir = ImpulseResponse(taps, config.time_resolution_s)
    spectrum = impulse_to_frequency_response(cir, config)
    cir_dir = tmp_path / "cirs"
    cir_dir.mkdir()
    write_frequency_file(cir_dir / "rec0.csv", spectrum)
    manifest = DatasetManifest(
        sweep_config=config,
        entries=(
            ManifestEntry(
                record_id="rec0",
                tx_id="t",
                rx_id="r",
                true_distance_m=None,
                scenario=None,
                cir_path="cirs/rec0.csv",
                domain="frequency",
            ),
        ),
        base_dir=tmp_path,
    )
    save_manifest(manifest, tmp_path / "manifest.jsonl")
    loaded = load_records(load_manifest(tmp_path / "manifest.jsonl"))
    assert len(loaded) == 1
    assert np.allclose(loaded[0].cir.taps, taps, atol=1e-9)


def test_cir_file_sidecar_round_trip(tmp_path):
    taps = np.array([0.5 + 0.25j, 0.0, -1.5j, 2.0])
    cir = ImpulseResponse(taps, 0.5e-9, origin_delay_s=0.0)
    write_cir_file(tmp_path / "one.csv", cir)
    sidecar = json.loads((tmp_path / "one.json").read_text())
    assert sidecar["domain"] == "time"
    assert sidecar["delay_step_s"] == 0.5e-9


def test_feature_table_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(5)
    n = 7
    table = FeatureTable(
        record_ids=[f"r{i}" for i in range(n)],
        scenarios=["LOS", "NLOS-W", "", "NLOS-M", "LOS", "NLOS-P", "NLOS-W"],
        true_distance_m=np.array([3.1, 8.0, np.nan, 4.4, 9.9, 5.5, 17.0]),
        matrix=rng.normal(size=(n, len(FEATURE_COLUMNS))),
    )
    path = tmp_path / "features.csv"
    write_feature_table(table, path)
    loaded = read_feature_table(path)
    assert loaded.record_ids == table.record_ids
    assert loaded.scenarios == table.scenarios
    assert np.array_equal(
        np.isnan(loaded.true_distance_m), np.isnan(table.true_distance_m)
    )
    mask = ~np.isnan(table.true_distance_m)
    assert np.array_equal(loaded.true_distance_m[mask], table.true_distance_m[mask])
    assert np.array_equal(loaded.matrix, table.matrix)
    # writing the loaded table back is byte-identical
    second = tmp_path / "again.csv"
    write_feature_table(loaded, second)
    assert second.read_bytes() == path.read_bytes()
