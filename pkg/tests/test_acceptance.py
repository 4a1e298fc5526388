"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest tests/test_acceptance.py -v -s`).

The 10%-accuracy and correlation criteria run the complete batch pipeline
(segmentation through features) over the full-size synthetic subject and
compare against its analytic ground truth.
"""

import json
import math
import time

import numpy as np
import pytest

from vesselkit import features as feat
from vesselkit._kernels import IS_COMPILED
from vesselkit.graph import audit_network, build_vessel_fused_network, classify_voxels
from vesselkit.hmrf import EmParams, LabelMap, e_step, em_segment, estimate_params, gaussian_pdf, icm_update
from vesselkit.phantoms import cow_phantom
from vesselkit.simulate import rasterize_tube, simulate_subject
from vesselkit.skeleton import SparseCenterline, distance_transform, skeletonize_3d
from vesselkit.volume import BinaryVolume, Volume3D, linear_index, threshold_initial

from conftest import COW_SEED, landmark_doc_from_truth

PCT_FEATURES = ("total_length", "tortuosity", "mean_radius", "surface_area", "fractal_dimension")
ALL_FEATURES = PCT_FEATURES + ("total_volume", "branch_count", "mean_section_area")


def _announce(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def cow192_pipeline(tmp_path_factory):
    """Full batch pipeline (EM path) over the canonical 192^3 phantom."""
    from vesselkit.cli import load_pipeline_config, run_pipeline
    from vesselkit.volume import write_volume

    landmarks, fbd, config = cow_phantom(dims=(192, 192, 192), spacing=0.5, seed=COW_SEED)
    vol, binary, truth = simulate_subject(landmarks, fbd, config)
    base = tmp_path_factory.mktemp("cow192run")
    write_volume(vol, base / "volume.json")
    (base / "landmarks.json").write_text(json.dumps(landmark_doc_from_truth(truth)))
    feat.rows_to_csv(truth.rows, base / "ground_truth.csv")
    cfg = load_pipeline_config(
        {
            "input": str(base / "volume.json"),
            "output_dir": str(base / "out"),
            "landmarks": str(base / "landmarks.json"),
            "seed": COW_SEED,
        }
    )
    t0 = time.perf_counter()
    run_pipeline(cfg)
    seconds = time.perf_counter() - t0
    return base, truth, seconds


def _joined(base, truth):
    extracted = {r.artery: r for r in feat.rows_from_csv(base / "out" / "features.csv")}
    pairs = []
    for g in truth.rows:
        e = extracted.get(g.artery)
        if e is None or not e.present:
            continue
        pairs.append((g, e))
    return pairs


def test_phantom_roundtrip_accuracy(cow192_pipeline):
    base, truth, seconds = cow192_pipeline
    pairs = _joined(base, truth)
    assert len(pairs) >= 8
    worst = {}
    violations = []
    for g, e in pairs:
        for fn in PCT_FEATURES:
            a, b = getattr(e, fn), getattr(g, fn)
            if a is None or b is None:
                continue
            err = 100.0 * (a - b) / b
            if abs(err) > abs(worst.get(fn, 0.0)):
                worst[fn] = err
            if abs(err) > 10.0:
                violations.append(f"{g.artery}.{fn}={err:+.2f}%")
    detail = (
        f"(runtime {seconds:.0f}s; worst "
        + ", ".join(f"{k} {v:+.1f}%" for k, v in worst.items())
        + (f"; violations: {violations}" if violations else "")
        + ")"
    )
    _announce("phantom-roundtrip-accuracy", not violations and seconds <= 300.0, detail)


def test_feature_correlation(cow192_pipeline):
    base, truth, _ = cow192_pipeline
    pairs = _joined(base, truth)
    rs = {}
    for fn in ALL_FEATURES:
        xs = [float(getattr(e, fn)) for g, e in pairs if getattr(e, fn) is not None and getattr(g, fn) is not None]
        ys = [float(getattr(g, fn)) for g, e in pairs if getattr(e, fn) is not None and getattr(g, fn) is not None]
        assert len(xs) >= 8
        rs[fn], _ = feat.pearson(xs, ys)
    ok = all(r > 0.9 for r in rs.values())
    detail = "(" + ", ".join(f"{k}={v:.3f}" for k, v in rs.items()) + ")"
    _announce("feature-correlation", ok, detail)


def test_em_optimizer_properties():
    rng = np.random.default_rng(2024)
    checked_ml = 0
    for trial in range(50):
        mu_lo, mu_hi = 40.0, 40.0 + rng.uniform(30, 80)
        truth_mask = rng.random((16, 16, 16)) < rng.uniform(0.2, 0.5)
        data = np.where(truth_mask, mu_hi, mu_lo) + rng.normal(0, rng.uniform(4, 10), (16, 16, 16))
        vol = Volume3D(data=data.astype(np.float32), spacing=(1, 1, 1))
        init = threshold_initial(vol, 0.6)
        params = estimate_params(vol, init)
        seg, m, p_out, trace = em_segment(vol, init, params)
        # accepted log-posterior sequence is non-decreasing
        for before, after in trace[:-1]:
            assert after >= before - 1e-9
        assert np.abs(m.m.sum(axis=1) - 1.0).max() <= 1e-9
        # beta=0 / single sweep reduces to the brute-force ML classifier
        if trial < 10:
            p0 = EmParams(mu=params.mu, sigma=params.sigma, beta=0.0, n_icm=1)
            out = icm_update(init, vol, p0)
            ml = np.ones((16, 16, 16), np.uint8)
            d = vol.data.astype(np.float64)
            s0 = gaussian_pdf(d, p0.mu[0], p0.sigma[0])
            s1 = gaussian_pdf(d, p0.mu[1], p0.sigma[1])
            ml[s1 > s0] = 2
            assert np.array_equal(out.labels, ml)
            checked_ml += 1
    _announce("em-optimizer-properties", True, f"(50 volumes, {checked_ml} ML equivalences)")


def test_distance_transform_oracle():
    from test_skeleton import brute_force_edt

    rng = np.random.default_rng(7)
    n_checked = 0
    for _ in range(100):
        dims = tuple(int(v) for v in rng.integers(3, 17, 3))
        bits = rng.random(dims) < rng.uniform(0.2, 0.85)
        if bits.all():
            bits[0, 0, 0] = False
        field = distance_transform(BinaryVolume(bits=bits, spacing=(1, 1, 1)))
        dist, nearest = brute_force_edt(bits)
        assert np.array_equal(field.dist**2, dist**2) or np.allclose(field.dist, dist, atol=1e-12)
        assert np.array_equal(field.nearest, nearest)
        n_checked += 1
    _announce("distance-transform-oracle", n_checked == 100, f"({n_checked} volumes, exact dist+index)")


def test_skeleton_topology():
    from scipy import ndimage

    rng = np.random.default_rng(11)
    structure = np.ones((3, 3, 3))
    for trial in range(50):
        dims = (32, 32, 32)
        bits = np.zeros(dims, bool)
        for _ in range(int(rng.integers(1, 4))):
            p0 = rng.uniform(3, 13, 3)
            p1 = rng.uniform(3, 13, 3)
            pts = np.linspace(p0, p1, 25)
            bits |= rasterize_tube(pts, np.full(25, rng.uniform(0.8, 1.8)), dims, (0.5, 0.5, 0.5)).bits
        bv = BinaryVolume(bits=bits, spacing=(0.5, 0.5, 0.5))
        skel = skeletonize_3d(bv)
        assert ndimage.label(skel.bits, structure=structure)[1] == ndimage.label(bits, structure=structure)[1]
        assert np.array_equal(skeletonize_3d(skel).bits, skel.bits)
    # torus cycle rank
    N = 40
    x, y, z = np.mgrid[0:N, 0:N, 0:20]
    d = (np.sqrt((x - N / 2) ** 2 + (y - N / 2) ** 2) - 12) ** 2 + (z - 10) ** 2
    skel = skeletonize_3d(BinaryVolume(bits=d <= 16, spacing=(1, 1, 1)))
    pts = {tuple(p) for p in np.argwhere(skel.bits)}
    edges = sum(
        1
        for p in pts
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0) and (p[0] + dx, p[1] + dy, p[2] + dz) in pts
    ) // 2
    comps = ndimage.label(skel.bits, structure=structure)[1]
    rank = edges - len(pts) + comps
    _announce("skeleton-topology", rank == 1, f"(50 tube unions idempotent+components; torus cycle rank {rank})")


def test_graph_one_to_one(cow192, toy_phantom):
    # full-size phantom skeleton
    net, skel, truth = cow192["net"], cow192["skel"], cow192["truth"]
    sg = classify_voxels(skel)
    assert len(sg.endpoints) + len(sg.between) + len(sg.node_candidates) == sg.voxel_count()
    audit_network(net, skel)  # one-to-one cover + handshake
    counts_ok = len(net.nodes) == truth.expected_nodes and len(net.traces) == truth.expected_traces
    # toy phantom skeleton
    _, binary, toy_truth, *_ = toy_phantom
    tskel = skeletonize_3d(binary)
    coords = np.argwhere(tskel.bits)
    cl = SparseCenterline(coords=coords, radii=np.ones(len(coords)), spacing=tskel.spacing)
    tnet = build_vessel_fused_network(tskel, cl)
    audit_network(tnet, tskel)
    toy_ok = len(tnet.nodes) == toy_truth.expected_nodes and len(tnet.traces) == toy_truth.expected_traces
    detail = (
        f"(cow {len(net.nodes)}/{truth.expected_nodes} nodes {len(net.traces)}/{truth.expected_traces} traces; "
        f"toy {len(tnet.nodes)}/{toy_truth.expected_nodes}, {len(tnet.traces)}/{toy_truth.expected_traces})"
    )
    _announce("graph-one-to-one", counts_ok and toy_ok, detail)


def test_feature_scale_laws():
    rng = np.random.default_rng(3)
    pts = np.cumsum(rng.normal(size=(15, 3)), axis=0)
    radii = rng.uniform(0.5, 2.0, 15)
    ok = True
    for s in (0.5, 2.0, 3.0):
        ok &= math.isclose(feat.total_length([pts * s]), s * feat.total_length([pts]), rel_tol=1e-12)
        ok &= math.isclose(feat.surface_area(pts * s, radii * s), s**2 * feat.surface_area(pts, radii), rel_tol=1e-12)
        ok &= math.isclose(feat.segment_volume(pts * s, radii * s), s**3 * feat.segment_volume(pts, radii), rel_tol=1e-12)
        ok &= math.isclose(feat.mean_section_area(radii * s), s**2 * feat.mean_section_area(radii), rel_tol=1e-12)
        ok &= math.isclose(feat.tortuosity(pts * s), feat.tortuosity(pts), rel_tol=1e-12)
        ok &= feat.branch_count(range(7)) == 7
    _announce("feature-scale-laws", ok, "(s in {0.5, 2, 3})")


def test_fractal_calibrators():
    vox = np.stack([np.arange(256), np.zeros(256, int), np.zeros(256, int)], axis=1)
    fd_line = feat.fractal_dimension(vox, (256, 256, 256))
    g = np.mgrid[0:256, 0:256]
    plane = np.stack([g[0].ravel(), g[1].ravel(), np.zeros(256 * 256, int)], axis=1)
    fd_plane = feat.fractal_dimension(plane, (256, 256, 256))
    side = 27
    keep = np.ones((side, side, side), bool)

    def carve(x0, y0, z0, s):
        if s < 3:
            return
        t = s // 3
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    if (i == 1) + (j == 1) + (k == 1) >= 2:
                        keep[x0 + i * t : x0 + (i + 1) * t, y0 + j * t : y0 + (j + 1) * t, z0 + k * t : z0 + (k + 1) * t] = False
                    else:
                        carve(x0 + i * t, y0 + j * t, z0 + k * t, t)

    carve(0, 0, 0, side)
    sponge = np.argwhere(np.kron(keep, np.ones((9, 9, 9), bool)))
    fd_menger = feat.fractal_dimension(sponge, (243, 243, 243))
    ok = abs(fd_line - 1.0) <= 0.05 and abs(fd_plane - 2.0) <= 0.05 and abs(fd_menger - math.log(20) / math.log(3)) <= 0.1
    _announce(
        "fractal-calibrators",
        ok,
        f"(line {fd_line:.3f}, plane {fd_plane:.3f}, menger {fd_menger:.3f} vs {math.log(20)/math.log(3):.3f})",
    )


def test_determinism(tmp_path, toy_phantom):
    from vesselkit.cli import main
    from vesselkit.volume import write_volume

    vol, *_ = toy_phantom
    write_volume(vol, tmp_path / "v.json")
    cfgs = {}
    for name in ("r1", "r2", "w1a", "w1b", "wNa", "wNb"):
        cfg = {"input": str(tmp_path / "v.json"), "output_dir": str(tmp_path / name), "seed": 3}
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(cfg))
        cfgs[name] = str(p)
    assert main(["run", cfgs["r1"]]) == 0
    assert main(["run", cfgs["r2"]]) == 0
    rerun_ok = (tmp_path / "r1" / "centerline.csv").read_bytes() == (tmp_path / "r2" / "centerline.csv").read_bytes()
    assert main(["run", cfgs["w1a"], cfgs["w1b"], "--workers", "1"]) == 0
    assert main(["run", cfgs["wNa"], cfgs["wNb"], "--workers", "2"]) == 0
    worker_ok = (tmp_path / "w1a" / "centerline.csv").read_bytes() == (tmp_path / "wNa" / "centerline.csv").read_bytes()
    graph_ok = (tmp_path / "r1" / "graph.json").read_bytes() == (tmp_path / "r2" / "graph.json").read_bytes()
    _announce("determinism", rerun_ok and worker_ok and graph_ok, "(reruns and 1-vs-2 workers byte-identical)")


def test_desk_scale_runtime(cow128_run):
    run_dir, truth, seconds = cow128_run
    assert (run_dir / "features.csv").exists()
    _announce("desk-scale-runtime", seconds <= 120.0, f"(128^3 full pipeline in {seconds:.1f}s, compiled={IS_COMPILED})")
