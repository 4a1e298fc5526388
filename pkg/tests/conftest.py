import json
import time
from pathlib import Path

import numpy as np
import pytest

from vesselkit.anatomy import CANONICAL_LABELS
from vesselkit.graph import apply_landmarks, build_vessel_fused_network, landmarks_from_json
from vesselkit.phantoms import cow_phantom, two_artery_phantom
from vesselkit.simulate import simulate_subject
from vesselkit.skeleton import compute_radii, distance_transform, skeletonize_3d

COW_SEED = 4  # validated fixture seed for the full-size phantom
COW128_SEED = 7


def landmark_doc_from_truth(truth, only_canonical=True):
    sp = np.asarray(truth.spacing)
    labels = [
        lab
        for lab in truth.assignable_labels
        if (lab in CANONICAL_LABELS) or not only_canonical
    ]
    return {
        "assignment_coords": {
            lab: [float(v) for v in np.asarray(truth.landmarks_mm[lab]) / sp] for lab in labels
        },
        "deleted_edges": [],
        "version": 1,
    }


@pytest.fixture(scope="session")
def toy_phantom():
    """Small two-artery phantom: (volume, binary, truth, landmarks, fbd, config)."""
    landmarks, fbd, config = two_artery_phantom(dims=(64, 64, 64), spacing=0.5, seed=3)
    vol, binary, truth = simulate_subject(landmarks, fbd, config)
    return vol, binary, truth, landmarks, fbd, config


@pytest.fixture(scope="session")
def cow192():
    """Full-size Circle-of-Willis phantom with the clean-mask chain prebuilt."""
    landmarks, fbd, config = cow_phantom(dims=(192, 192, 192), spacing=0.5, seed=COW_SEED)
    vol, binary, truth = simulate_subject(landmarks, fbd, config)
    skel = skeletonize_3d(binary)
    centerline = compute_radii(skel, distance_transform(binary))
    net = build_vessel_fused_network(skel, centerline)
    lm = landmarks_from_json(landmark_doc_from_truth(truth), net)
    table = apply_landmarks(net, lm)
    return {
        "volume": vol,
        "binary": binary,
        "truth": truth,
        "skel": skel,
        "centerline": centerline,
        "net": net,
        "landmark_set": lm,
        "table": table,
        "config": config,
    }


@pytest.fixture(scope="session")
def cow128_run(tmp_path_factory):
    """Full batch pipeline over a 128^3 phantom; returns (run_dir, truth, seconds)."""
    from vesselkit.cli import load_pipeline_config, run_pipeline
    from vesselkit.volume import write_volume

    landmarks, fbd, config = cow_phantom(dims=(128, 128, 128), spacing=0.5, seed=COW128_SEED)
    vol, binary, truth = simulate_subject(landmarks, fbd, config)
    base = tmp_path_factory.mktemp("cow128")
    write_volume(vol, base / "volume.json")
    (base / "landmarks.json").write_text(json.dumps(landmark_doc_from_truth(truth)))
    cfg = load_pipeline_config(
        {
            "input": str(base / "volume.json"),
            "output_dir": str(base / "out"),
            "landmarks": str(base / "landmarks.json"),
            "seed": COW128_SEED,
        }
    )
    t0 = time.perf_counter()
    run_pipeline(cfg)
    seconds = time.perf_counter() - t0
    return base / "out", truth, seconds


@pytest.fixture(scope="session")
def toy_run_dir(tmp_path_factory, toy_phantom):
    """Batch pipeline over the toy phantom (no landmarks: graph/guide artifacts)."""
    from vesselkit.cli import load_pipeline_config, run_pipeline
    from vesselkit.volume import write_volume

    vol, binary, truth, landmarks, fbd, config = toy_phantom
    base = tmp_path_factory.mktemp("toyrun")
    write_volume(vol, base / "volume.json")
    cfg = load_pipeline_config(
        {"input": str(base / "volume.json"), "output_dir": str(base / "out"), "seed": 3}
    )
    run_pipeline(cfg)
    return base / "out"
