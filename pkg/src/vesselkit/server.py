"""HTTP labeling service over a pipeline run directory.

Serves the vessel-fused graph and MIP guide to the browser labeling tool,
stores the working landmark set, applies edge deletions, and finalizes the
classification into a feature report.  Mutations are validated against the
network invariants before acceptance (422 on violation, 409 when mandatory
landmarks are missing) and serialized behind a single writer lock; the
finalize path reuses the batch code so interactive and batch runs produce
byte-identical feature CSVs.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from . import features as feat
from .anatomy import DEFAULT_CONFIG, load_classification_config
from .errors import (
    AmbiguousSegmentError,
    ConsistencyError,
    GraphEditError,
    IncompleteLandmarkError,
    UnknownLabelError,
)
from .graph import apply_landmarks, delete_edge, landmarks_from_json, landmarks_to_json, network_from_json


def create_app(run_dir, classification_config=None) -> FastAPI:
    run_dir = Path(run_dir)
    with open(run_dir / "graph.json") as fh:
        base_net = network_from_json(json.load(fh))
    guide_path = run_dir / "guide.json"
    labels_path = run_dir / "labels.json"
    classification = (
        load_classification_config(classification_config) if classification_config else DEFAULT_CONFIG
    )

    state = {
        "labels": {"assignments": {}, "deleted_edges": [], "version": 1},
    }
    if labels_path.exists():
        state["labels"] = json.loads(labels_path.read_text())
    lock = threading.Lock()

    app = FastAPI(title="vesselkit labeling service", version="1")

    def _validate_labels(doc) -> dict:
        if not isinstance(doc, dict) or "assignments" not in doc:
            raise HTTPException(422, detail="payload must carry an 'assignments' object")
        assignments = doc["assignments"]
        if not isinstance(assignments, dict):
            raise HTTPException(422, detail="'assignments' must map labels to node ids")
        for label in assignments:
            if label not in classification.labels:
                raise HTTPException(422, detail=f"label '{label}' is not canonical")
        node_ids = {n.id for n in base_net.nodes}
        for label, nid in assignments.items():
            if not isinstance(nid, int) or nid not in node_ids:
                raise HTTPException(422, detail=f"label '{label}' references unknown node id {nid}")
        used = list(assignments.values())
        if len(used) != len(set(used)):
            raise HTTPException(422, detail="each node may carry at most one landmark label")
        deleted = doc.get("deleted_edges", [])
        trace_ids = {t.id for t in base_net.traces}
        for tid in deleted:
            if tid not in trace_ids:
                raise HTTPException(422, detail=f"deleted edge {tid} does not exist")
        return {
            "assignments": {str(k): int(v) for k, v in assignments.items()},
            "deleted_edges": [int(t) for t in deleted],
            "version": int(doc.get("version", 1)),
        }

    @app.get("/v1/graph")
    def get_graph():
        return json.loads((run_dir / "graph.json").read_text())

    @app.get("/v1/guide")
    def get_guide():
        if not guide_path.exists():
            raise HTTPException(404, detail="no guide artifact in this run directory")
        return json.loads(guide_path.read_text())

    @app.get("/v1/labels")
    def get_labels():
        return state["labels"]

    @app.put("/v1/labels")
    def put_labels(doc: dict):
        cleaned = _validate_labels(doc)
        with lock:
            state["labels"] = cleaned
            labels_path.write_text(json.dumps(cleaned, indent=2, sort_keys=True) + "\n")
        return cleaned

    @app.post("/v1/edges/delete")
    def post_delete(doc: dict):
        tid = doc.get("trace_id")
        if not isinstance(tid, int):
            raise HTTPException(422, detail="payload must carry an integer 'trace_id'")
        try:
            net = base_net
            for existing in state["labels"]["deleted_edges"]:
                net = delete_edge(net, existing)
            delete_edge(net, tid)
        except GraphEditError as exc:
            raise HTTPException(422, detail=str(exc))
        with lock:
            if tid not in state["labels"]["deleted_edges"]:
                state["labels"]["deleted_edges"].append(tid)
            labels_path.write_text(json.dumps(state["labels"], indent=2, sort_keys=True) + "\n")
        return state["labels"]

    # serve the labeling tool bundle when it has been built (frontend/dist)
    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=dist, html=True), name="labeler")

    @app.post("/v1/finalize")
    def post_finalize():
        doc = state["labels"]
        try:
            lm = landmarks_from_json(doc, base_net)
            table = apply_landmarks(base_net, lm, classification)
            rows = feat.extract_features(table)
        except IncompleteLandmarkError as exc:
            return JSONResponse(status_code=409, content={"detail": str(exc), "missing": exc.missing})
        except (UnknownLabelError, AmbiguousSegmentError, ConsistencyError, GraphEditError) as exc:
            raise HTTPException(422, detail=str(exc))
        with lock:
            feat.rows_to_csv(rows, run_dir / "features.csv")
        report = [
            {"artery": r.artery, "present": r.present, **dict(zip(feat.FEATURE_COLUMNS, r.values()))}
            for r in rows
        ]
        return {"rows": report, "features_csv": str(run_dir / "features.csv")}

    return app
