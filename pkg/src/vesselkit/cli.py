"""Command-line pipeline: batch stages, phantom simulation, validation, and
the labeling server.

Every stage writes its artifacts into the run directory so partial results
survive failures; a manifest records the effective config hash, per-stage
timings and the seed.  Exit codes: 0 success, 2 validation error, 3 stage
failure.
"""

from __future__ import annotations

import argparse
import base64
import concurrent.futures
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, features as feat
from .anatomy import DEFAULT_CONFIG, load_classification_config
from .errors import IncompleteLandmarkError, ParameterError, StageFailure, VesselkitError
from .graph import (
    apply_landmarks,
    audit_network,
    build_vessel_fused_network,
    labeling_guide,
    landmarks_from_json,
    network_from_json,
    network_to_json,
)
from .hmrf import EmParams, em_segment, estimate_params
from .phantoms import cow_phantom, default_fbd, two_artery_phantom
from .simulate import load_fbd, simulate_subject
from .skeleton import centerline_to_csv, compute_radii, distance_transform, skeletonize_3d
from .volume import BinaryVolume, Volume3D, read_volume, resample_isotropic, threshold_initial, write_volume


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_pipeline_config(path_or_dict) -> dict:
    if isinstance(path_or_dict, dict):
        raw = dict(path_or_dict)
    else:
        with open(path_or_dict) as fh:
            raw = json.load(fh)
    cfg = {
        "input": raw.get("input"),
        "output_dir": raw.get("output_dir"),
        "target_spacing": raw.get("target_spacing"),
        "threshold_percentile": float(raw.get("threshold_percentile", 0.98)),
        "em": raw.get("em", {}),
        "order": raw.get("order", "segment_first"),
        "classification_config": raw.get("classification_config"),
        "landmarks": raw.get("landmarks"),
        "seed": int(raw.get("seed", 0)),
        "emit_logposterior": bool(raw.get("emit_logposterior", True)),
    }
    if cfg["order"] not in ("segment_first", "resample_first"):
        raise ParameterError(f"order must be segment_first or resample_first, got {cfg['order']}")
    return cfg


def _em_params_from_config(vol, init, overrides) -> EmParams:
    base = estimate_params(vol, init)
    allowed = {"beta", "eps_em", "n_icm", "n_em_max"}
    bad = set(overrides) - allowed
    if bad:
        raise ParameterError(f"unknown EM overrides: {sorted(bad)}")
    kwargs = {k: overrides[k] for k in allowed if k in overrides}
    if not kwargs:
        return base
    from dataclasses import replace

    return replace(base, **kwargs)


def guide_to_json(guide) -> dict:
    """GuidePackage -> JSON with PNG-encoded projections."""
    from PIL import Image

    views = []
    for axis, mip in guide.mips.items():
        arr = np.asarray(mip, dtype=np.float64)
        lo, hi = float(arr.min()), float(arr.max())
        scaled = np.zeros_like(arr, dtype=np.uint8) if hi == lo else ((arr - lo) / (hi - lo) * 255).astype(np.uint8)
        img = Image.fromarray(scaled.T)  # (u, v) -> image rows are v
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        views.append(
            {
                "axis": axis,
                "width": int(arr.shape[0]),
                "height": int(arr.shape[1]),
                "png_base64": base64.b64encode(buf.getvalue()).decode(),
                "nodes": [{"id": i, "u": u, "v": v} for i, u, v in guide.node_projections[axis]],
            }
        )
    return {"views": views, "dims": list(guide.dims)}


def run_pipeline(cfg: dict) -> dict:
    """Execute the batch workflow; returns the manifest dict."""
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    manifest = {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "version": __version__,
        "timings": timings,
    }

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except VesselkitError as exc:
            raise StageFailure(name, exc) from exc
        timings[name] = round(time.perf_counter() - t0, 3)
        return result

    vol = stage("read", lambda: read_volume(cfg["input"]))
    target = cfg["target_spacing"] or min(vol.spacing)

    if cfg["order"] == "resample_first":
        vol = stage("resample", lambda: resample_isotropic(vol, target))

    def segment():
        init = threshold_initial(vol, cfg["threshold_percentile"])
        params = _em_params_from_config(vol, init, cfg["em"])
        seg, memberships, params2, trace = em_segment(vol, init, params)
        if cfg["emit_logposterior"]:
            with open(out / "logposterior.csv", "w") as fh:
                fh.write("iteration,logp_before,logp_after\n")
                for i, (b, a) in enumerate(trace):
                    fh.write(f"{i},{b:.10g},{a:.10g}\n")
        return BinaryVolume(bits=seg.labels == 2, spacing=vol.spacing)

    binary = stage("segment", segment)
    if cfg["order"] == "segment_first":
        binary = stage("resample", lambda: resample_isotropic(binary, target))
    stage("write_binary", lambda: write_volume(binary, out / "binary.json"))

    skel = stage("skeletonize", lambda: skeletonize_3d(binary))
    centerline = stage("radii", lambda: compute_radii(skel, distance_transform(binary)))
    stage("write_centerline", lambda: centerline_to_csv(centerline, out / "centerline.csv"))

    net = stage("graph", lambda: build_vessel_fused_network(skel, centerline))
    audit_network(net, skel)
    stage("write_graph", lambda: _write_json(out / "graph.json", network_to_json(net)))
    guide = stage("guide", lambda: labeling_guide(vol, net))
    stage("write_guide", lambda: _write_json(out / "guide.json", guide_to_json(guide)))

    classification = (
        load_classification_config(cfg["classification_config"]) if cfg["classification_config"] else DEFAULT_CONFIG
    )
    if cfg["landmarks"]:
        with open(cfg["landmarks"]) as fh:
            lm_doc = json.load(fh)
        lm = landmarks_from_json(lm_doc, net)
        table = stage("classify", lambda: apply_landmarks(net, lm, classification))
        rows = stage("features", lambda: feat.extract_features(table))
        feat.rows_to_csv(rows, out / "features.csv")
        _write_json(out / "features.json", _rows_to_json(rows))
        _write_json(
            out / "table.json",
            {
                "segments": {k: list(v) for k, v in table.segments.items()},
                "presence": dict(table.presence),
                "subnetworks": {k: list(v) for k, v in table.subnetworks.items()},
                "paths": {k: list(v) for k, v in table.paths.items()},
            },
        )
    manifest["artifacts"] = sorted(p.name for p in out.iterdir())
    _write_json(out / "manifest.json", manifest)
    return manifest


def _rows_to_json(rows):
    return [
        {
            "artery": r.artery,
            "present": r.present,
            **{
                k: v
                for k, v in zip(feat.FEATURE_COLUMNS, r.values())
            },
        }
        for r in rows
    ]


def cmd_run(args):
    configs = [load_pipeline_config(p) for p in args.config]
    if args.seed is not None:
        for cfg in configs:
            cfg["seed"] = args.seed
    if args.workers > 1 and len(configs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            list(pool.map(run_pipeline, configs))
    else:
        for cfg in configs:
            run_pipeline(cfg)
    return 0


def cmd_simulate(args):
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.cow:
        landmarks, fbd, config = cow_phantom(dims=(args.grid,) * 3, spacing=args.spacing, seed=args.seed)
    elif args.toy:
        landmarks, fbd, config = two_artery_phantom(dims=(args.grid,) * 3, spacing=args.spacing, seed=args.seed)
    else:
        with open(args.config) as fh:
            config = json.load(fh)
        landmarks = config["landmarks"]
        fbd = load_fbd(args.fbd) if args.fbd else default_fbd()
        if args.seed is not None:
            config["seed"] = args.seed
    vol, binary, truth = simulate_subject(landmarks, fbd, config, seed=config.get("seed"))
    write_volume(vol, out / "volume.json")
    write_volume(binary, out / "true_binary.json")
    feat.rows_to_csv(truth.rows, out / "ground_truth.csv")
    sp = np.asarray(truth.spacing)
    from .anatomy import CANONICAL_LABELS

    _write_json(
        out / "landmarks.json",
        {
            "assignment_coords": {
                lab: [float(v) for v in np.asarray(truth.landmarks_mm[lab]) / sp]
                for lab in truth.assignable_labels
                if lab in CANONICAL_LABELS
            },
            "deleted_edges": [],
            "version": 1,
        },
    )
    _write_json(
        out / "provenance.json",
        {
            "seed": truth.seed,
            "expected_nodes": truth.expected_nodes,
            "expected_traces": truth.expected_traces,
            "assignable_labels": list(truth.assignable_labels),
            "landmarks_mm": truth.landmarks_mm,
            "dims": list(truth.dims),
            "spacing": list(truth.spacing),
            "config_hash": config_hash(config),
        },
    )
    return 0


def validate_run(features_csv, truth_csv, out_path=None) -> dict:
    """Join extracted features with ground truth and report agreement."""
    extracted = {r.artery: r for r in feat.rows_from_csv(features_csv)}
    truth_rows = [r for r in feat.rows_from_csv(truth_csv)]
    missing = [r.artery for r in truth_rows if r.artery not in extracted]
    if missing:
        raise ParameterError(f"extracted features missing arteries: {', '.join(sorted(missing))}")
    report = {"per_artery": {}, "pearson": {}, "n_joined": 0}
    names = [r.artery for r in truth_rows if extracted[r.artery].present]
    report["n_joined"] = len(names)
    feature_names = (
        "total_length",
        "mean_radius",
        "total_volume",
        "branch_count",
        "mean_section_area",
        "surface_area",
        "tortuosity",
        "fractal_dimension",
    )
    for name in names:
        g = next(r for r in truth_rows if r.artery == name)
        e = extracted[name]
        diffs = {}
        for fn in feature_names:
            a, b = getattr(e, fn), getattr(g, fn)
            if a is None or b is None or b == 0:
                diffs[fn] = None
            else:
                diffs[fn] = 100.0 * (float(a) - float(b)) / float(b)
        report["per_artery"][name] = diffs
    for fn in feature_names:
        xs, ys = [], []
        for name in names:
            g = next(r for r in truth_rows if r.artery == name)
            e = extracted[name]
            a, b = getattr(e, fn), getattr(g, fn)
            if a is None or b is None:
                continue
            xs.append(float(a))
            ys.append(float(b))
        if len(xs) >= 3:
            r, p = feat.pearson(xs, ys)
            report["pearson"][fn] = {"r": r, "p": p, "n": len(xs)}
    if out_path:
        _write_json(out_path, report)
    return report


def cmd_validate(args):
    report = validate_run(args.features, args.truth, args.output)
    worst = 0.0
    for diffs in report["per_artery"].values():
        for v in diffs.values():
            if v is not None:
                worst = max(worst, abs(v))
    print(f"joined {report['n_joined']} arteries; worst |percent diff| {worst:.2f}%")
    for fn, stats in report["pearson"].items():
        print(f"  r[{fn}] = {stats['r']:.4f} (n={stats['n']}, p={stats['p']:.3g})")
    return 0


def cmd_serve(args):
    import uvicorn

    from .server import create_app

    app = create_app(args.run_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_segment(args):
    cfg = load_pipeline_config(
        {
            "input": args.input,
            "output_dir": args.output_dir,
            "threshold_percentile": args.percentile,
            "em": json.loads(args.em) if args.em else {},
        }
    )
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    vol = read_volume(cfg["input"])
    init = threshold_initial(vol, cfg["threshold_percentile"])
    params = _em_params_from_config(vol, init, cfg["em"])
    seg, _, _, _ = em_segment(vol, init, params)
    write_volume(BinaryVolume(bits=seg.labels == 2, spacing=vol.spacing), out / "binary.json")
    return 0


def cmd_skeletonize(args):
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    binary = read_volume(args.input)
    if isinstance(binary, Volume3D):
        binary = BinaryVolume(bits=binary.data > 0.5, spacing=binary.spacing)
    skel = skeletonize_3d(binary)
    centerline = compute_radii(skel, distance_transform(binary))
    write_volume(skel, out / "skeleton.json")
    centerline_to_csv(centerline, out / "centerline.csv")
    return 0


def cmd_graph(args):
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    binary = read_volume(args.input)
    if isinstance(binary, Volume3D):
        binary = BinaryVolume(bits=binary.data > 0.5, spacing=binary.spacing)
    skel = skeletonize_3d(binary)
    centerline = compute_radii(skel, distance_transform(binary))
    net = build_vessel_fused_network(skel, centerline)
    audit_network(net, skel)
    _write_json(out / "graph.json", network_to_json(net))
    return 0


def cmd_features(args):
    with open(Path(args.run_dir) / "graph.json") as fh:
        net = network_from_json(json.load(fh))
    with open(args.landmarks) as fh:
        lm = landmarks_from_json(json.load(fh), net)
    classification = load_classification_config(args.classification) if args.classification else DEFAULT_CONFIG
    table = apply_landmarks(net, lm, classification)
    rows = feat.extract_features(table)
    feat.rows_to_csv(rows, Path(args.run_dir) / "features.csv")
    _write_json(Path(args.run_dir) / "features.json", _rows_to_json(rows))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="vesselkit", description="Artery network extraction and phantom validation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full batch pipeline from a config file")
    run.add_argument("config", nargs="+", help="pipeline config JSON path(s)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(fn=cmd_run)

    seg = sub.add_parser("segment", help="HMRF-EM segmentation only")
    seg.add_argument("input")
    seg.add_argument("output_dir")
    seg.add_argument("--percentile", type=float, default=0.98)
    seg.add_argument("--em", default=None, help='JSON object of EM overrides, e.g. {"beta":1}')
    seg.set_defaults(fn=cmd_segment)

    sk = sub.add_parser("skeletonize", help="skeleton + radii from a binary volume")
    sk.add_argument("input")
    sk.add_argument("output_dir")
    sk.set_defaults(fn=cmd_skeletonize)

    gr = sub.add_parser("graph", help="vessel-fused network from a binary volume")
    gr.add_argument("input")
    gr.add_argument("output_dir")
    gr.set_defaults(fn=cmd_graph)

    ft = sub.add_parser("features", help="classify landmarks and extract features")
    ft.add_argument("run_dir")
    ft.add_argument("landmarks")
    ft.add_argument("--classification", default=None)
    ft.set_defaults(fn=cmd_features)

    sim = sub.add_parser("simulate", help="generate a synthetic phantom")
    sim.add_argument("output_dir")
    sim.add_argument("--config", default=None, help="simulation config JSON")
    sim.add_argument("--fbd", default=None, help="Fourier basis dictionary JSON")
    sim.add_argument("--cow", action="store_true", help="built-in Circle-of-Willis phantom")
    sim.add_argument("--toy", action="store_true", help="built-in two-artery toy phantom")
    sim.add_argument("--grid", type=int, default=192)
    sim.add_argument("--spacing", type=float, default=0.5)
    sim.add_argument("--seed", type=int, default=4)
    sim.set_defaults(fn=cmd_simulate)

    val = sub.add_parser("validate", help="compare extracted features against ground truth")
    val.add_argument("features")
    val.add_argument("truth")
    val.add_argument("--output", default=None)
    val.set_defaults(fn=cmd_validate)

    srv = sub.add_parser("serve", help="labeling server over a run directory")
    srv.add_argument("run_dir")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8739)
    srv.set_defaults(fn=cmd_serve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (VesselkitError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
