import json
from pathlib import Path

import numpy as np
import pytest

from vesselkit.cli import config_hash, load_pipeline_config, main, run_pipeline, validate_run
from vesselkit.errors import ParameterError


def test_manifest_and_artifacts(toy_run_dir):
    manifest = json.loads((toy_run_dir / "manifest.json").read_text())
    for name in ("binary.json", "centerline.csv", "graph.json", "guide.json", "logposterior.csv"):
        assert name in manifest["artifacts"], name
        assert (toy_run_dir / name).exists()
    assert manifest["config_hash"]
    assert "segment" in manifest["timings"]


def test_config_hash_changes_with_parameters():
    a = load_pipeline_config({"input": "x.json", "output_dir": "o"})
    b = load_pipeline_config({"input": "x.json", "output_dir": "o", "threshold_percentile": 0.97})
    assert config_hash(a) != config_hash(b)
    assert config_hash(a) == config_hash(load_pipeline_config({"input": "x.json", "output_dir": "o"}))


def test_missing_landmarks_is_validation_error(tmp_path, toy_run_dir):
    rc = main(["features", str(toy_run_dir), str(tmp_path / "absent.json")])
    assert rc == 2


def test_full_run_produces_features(cow128_run):
    run_dir, truth, seconds = cow128_run
    assert (run_dir / "features.csv").exists()
    assert (run_dir / "table.json").exists()
    table = json.loads((run_dir / "table.json").read_text())
    assert table["presence"]["Pcomm_L"] is True


def test_rerun_byte_identical(tmp_path, toy_phantom):
    from vesselkit.volume import write_volume

    vol, *_ = toy_phantom
    write_volume(vol, tmp_path / "v.json")
    outs = []
    for name in ("a", "b"):
        cfg = load_pipeline_config(
            {"input": str(tmp_path / "v.json"), "output_dir": str(tmp_path / name), "seed": 3}
        )
        run_pipeline(cfg)
        outs.append((tmp_path / name / "centerline.csv").read_bytes())
    assert outs[0] == outs[1]


def test_workers_determinism(tmp_path, toy_phantom):
    """1 vs N worker processes produce byte-identical artifacts."""
    from vesselkit.volume import write_volume

    vol, *_ = toy_phantom
    write_volume(vol, tmp_path / "v.json")
    cfg_paths = []
    for tag in ("s1", "s2"):
        for w in ("w1", "wN"):
            cfg = {
                "input": str(tmp_path / "v.json"),
                "output_dir": str(tmp_path / f"{tag}_{w}"),
                "seed": 3,
            }
            p = tmp_path / f"{tag}_{w}.json"
            p.write_text(json.dumps(cfg))
            cfg_paths.append(str(p))
    rc = main(["run", cfg_paths[0], cfg_paths[2], "--workers", "1"])
    assert rc == 0
    rc = main(["run", cfg_paths[1], cfg_paths[3], "--workers", "2"])
    assert rc == 0
    for tag in ("s1", "s2"):
        a = (tmp_path / f"{tag}_w1" / "centerline.csv").read_bytes()
        b = (tmp_path / f"{tag}_wN" / "centerline.csv").read_bytes()
        assert a == b


def test_simulate_subcommand(tmp_path):
    rc = main(["simulate", str(tmp_path / "sim"), "--toy", "--grid", "48", "--seed", "5"])
    assert rc == 0
    for name in ("volume.json", "true_binary.json", "ground_truth.csv", "landmarks.json", "provenance.json"):
        assert (tmp_path / "sim" / name).exists()


def test_validate_self_join(tmp_path, cow192):
    from vesselkit.features import extract_features, rows_to_csv

    rows = extract_features(cow192["table"])
    rows_to_csv(rows, tmp_path / "f.csv")
    report = validate_run(tmp_path / "f.csv", tmp_path / "f.csv")
    for diffs in report["per_artery"].values():
        for v in diffs.values():
            if v is not None:
                assert abs(v) < 1e-9
    assert all(s["r"] == pytest.approx(1.0) for s in report["pearson"].values())


def test_validate_join_error(tmp_path, cow192):
    from vesselkit.features import FeatureRow, extract_features, rows_to_csv

    rows = extract_features(cow192["table"])
    rows_to_csv(rows, tmp_path / "f.csv")
    truth_rows = rows + [FeatureRow(artery="NotInPipeline", total_length=1.0, present=True)]
    rows_to_csv(truth_rows, tmp_path / "t.csv")
    with pytest.raises(ParameterError, match="NotInPipeline"):
        validate_run(tmp_path / "f.csv", tmp_path / "t.csv")


def test_bad_order_rejected():
    with pytest.raises(ParameterError):
        load_pipeline_config({"input": "x", "output_dir": "o", "order": "whatever"})
