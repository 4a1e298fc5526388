"""Vessel-fused network construction and landmark-driven classification.

The skeleton decomposes into endpoints (degree 1), between-points (degree 2)
and junction candidates (degree >= 3); 26-connected clusters of candidates
form hubs that collapse into a single elected center node.  Traces are ordered
voxel paths between global nodes carrying per-point radii, in one-to-one
correspondence with the skeleton: every skeleton voxel is either a node voxel
(endpoint, hub voxel, loop anchor) or interior to exactly one trace.

Landmark assignments resolve the network into the dynamic graph table: named
proximal segments as shortest landmark-to-landmark paths, fault-tolerant
arteries marked absent instead of failing, and distal trees grouped into
per-side subnetworks.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .anatomy import DEFAULT_CONFIG, ClassificationConfig
from .errors import (
    AmbiguousSegmentError,
    ConsistencyError,
    GraphEditError,
    IncompleteLandmarkError,
    UnknownLabelError,
)
from .skeleton import SparseCenterline
from .volume import BinaryVolume, Volume3D, linear_index

_OFFSETS26 = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)


@dataclass(frozen=True)
class SkeletonGraph:
    """Voxel taxonomy of a thinned skeleton under 26-connectivity."""

    adjacency: dict
    degree: dict
    endpoints: tuple
    between: tuple
    node_candidates: tuple
    dims: tuple
    spacing: tuple

    def voxel_count(self):
        return len(self.degree)


@dataclass(frozen=True)
class Hub:
    """A 26-connected cluster of junction candidates with its elected center."""

    members: tuple
    hub_endpoints: tuple
    center: tuple


@dataclass(frozen=True)
class GraphNode:
    id: int
    coord: tuple
    kind: str  # endpoint | junction | hub_center
    extra_voxels: tuple = ()  # hub members folded into this node


@dataclass(frozen=True)
class Trace:
    id: int
    start: int
    end: int
    points: tuple  # ordered voxel coords, terminals included
    radii: tuple
    closed: bool = False

    def interior(self):
        if self.closed:
            return self.points[1:-1] if len(self.points) > 2 else ()
        return self.points[1:-1]


@dataclass(frozen=True)
class VesselFusedNetwork:
    nodes: tuple
    traces: tuple
    spacing: tuple
    dims: tuple = None

    def node_by_id(self):
        return {n.id: n for n in self.nodes}

    def trace_by_id(self):
        return {t.id: t for t in self.traces}

    def incident_traces(self):
        inc = {n.id: [] for n in self.nodes}
        for t in self.traces:
            inc[t.start].append(t.id)
            inc[t.end].append(t.id)
        return inc

    def trace_length_mm(self, trace):
        pts = np.asarray(trace.points, dtype=np.float64) * np.asarray(self.spacing)
        if len(pts) < 2:
            return 0.0
        return float(np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1)).sum())

    def component_count(self):
        parent = {n.id: n.id for n in self.nodes}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for t in self.traces:
            ra, rb = find(t.start), find(t.end)
            if ra != rb:
                parent[ra] = rb
        return len({find(n.id) for n in self.nodes})


@dataclass(frozen=True)
class LandmarkSet:
    """Canonical label -> node id assignments plus spurious-edge deletions."""

    assignments: dict
    deleted_edges: tuple = ()
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))
        object.__setattr__(self, "deleted_edges", tuple(self.deleted_edges))
        used = list(self.assignments.values())
        if len(used) != len(set(used)):
            raise ConsistencyError("each node id may carry at most one landmark label")


@dataclass(frozen=True)
class DynamicGraphTable:
    """Landmark-resolved mapping from canonical artery names to trace sets."""

    segments: dict  # name -> tuple of trace ids
    presence: dict  # fault-tolerant name -> bool
    subnetworks: dict  # subnetwork name -> tuple of trace ids
    paths: dict  # segment name -> tuple of node ids along the defining path
    roots: dict  # subnetwork name -> tuple of gateway node ids
    net: VesselFusedNetwork = None


def _neighbors_in(coord, voxels):
    x, y, z = coord
    out = []
    for dx, dy, dz in _OFFSETS26:
        q = (x + dx, y + dy, z + dz)
        if q in voxels:
            out.append(q)
    return out


def classify_voxels(skel: BinaryVolume) -> SkeletonGraph:
    """Degree-based partition of skeleton voxels (26-connectivity).

    Isolated voxels (degree 0) classify as endpoints.
    """
    coords = np.argwhere(skel.bits)
    order = np.argsort(linear_index(coords[:, 0], coords[:, 1], coords[:, 2], skel.dims), kind="stable")
    coords = coords[order]
    voxel_set = {tuple(c) for c in coords.tolist()}
    adjacency = {}
    degree = {}
    endpoints, between, candidates = [], [], []
    for c in coords.tolist():
        c = tuple(c)
        nbs = _neighbors_in(c, voxel_set)
        nbs.sort(key=lambda q: linear_index(q[0], q[1], q[2], skel.dims))
        adjacency[c] = tuple(nbs)
        d = len(nbs)
        degree[c] = d
        if d <= 1:
            endpoints.append(c)
        elif d == 2:
            between.append(c)
        else:
            candidates.append(c)
    return SkeletonGraph(
        adjacency=adjacency,
        degree=degree,
        endpoints=tuple(endpoints),
        between=tuple(between),
        node_candidates=tuple(candidates),
        dims=skel.dims,
        spacing=skel.spacing,
    )


def detect_hubs(sg: SkeletonGraph):
    """26-connected clusters of junction candidates, with centers elected."""
    cand = set(sg.node_candidates)
    hubs = []
    seen = set()
    for seed in sg.node_candidates:  # already in linear-index order
        if seed in seen:
            continue
        comp = [seed]
        seen.add(seed)
        stack = [seed]
        while stack:
            cur = stack.pop()
            for nb in sg.adjacency[cur]:
                if nb in cand and nb not in seen:
                    seen.add(nb)
                    comp.append(nb)
                    stack.append(nb)
        comp.sort(key=lambda q: linear_index(q[0], q[1], q[2], sg.dims))
        boundary = set()
        for m in comp:
            for nb in sg.adjacency[m]:
                if nb not in cand:
                    boundary.add(nb)
        hub_endpoints = tuple(sorted(boundary, key=lambda q: linear_index(q[0], q[1], q[2], sg.dims)))
        hub = Hub(members=tuple(comp), hub_endpoints=hub_endpoints, center=None)
        hub = replace(hub, center=hub_center(hub, sg.dims))
        hubs.append(hub)
    return hubs


def hub_center(hub: Hub, dims=None) -> tuple:
    """Member minimizing the variance of within-skeleton geodesic distances to
    the hub endpoints; ties break to smaller mean distance, then smaller
    linear index.  Distances are hop counts inside members + hub endpoints."""
    if dims is None:
        dims = tuple(max(c[i] for c in hub.members) + 2 for i in range(3))

    def lin(q):
        return linear_index(q[0], q[1], q[2], dims)

    if not hub.hub_endpoints:
        return min(hub.members, key=lin)
    mini = set(hub.members) | set(hub.hub_endpoints)
    best = None
    best_key = None
    for m in sorted(hub.members, key=lin):
        dist = {m: 0}
        frontier = [m]
        while frontier:
            nxt = []
            for cur in frontier:
                for q in _neighbors_in(cur, mini):
                    if q not in dist:
                        dist[q] = dist[cur] + 1
                        nxt.append(q)
            frontier = nxt
        ds = [dist.get(e) for e in hub.hub_endpoints]
        if any(d is None for d in ds):
            key = (math.inf, math.inf, lin(m))
        else:
            n = len(ds)
            s1 = sum(ds)
            s2 = sum(d * d for d in ds)
            key = (n * s2 - s1 * s1, s1, lin(m))  # scaled variance, scaled mean, index
        if best_key is None or key < best_key:
            best_key = key
            best = m
    return best


def _internal_path(hub: Hub, entry: tuple, remaining: set, dims) -> tuple:
    """Deterministic shortest member path from `entry` (exclusive) to the hub
    center (exclusive) through not-yet-consumed members; empty when the entry
    touches the center or no free path exists."""

    def lin(q):
        return linear_index(q[0], q[1], q[2], dims)

    center = hub.center
    allowed = (remaining | {center}) if center in hub.members else remaining
    # BFS from center over allowed members, parents toward the center
    dist = {center: 0}
    frontier = [center]
    while frontier:
        nxt = []
        for cur in frontier:
            for q in sorted(_neighbors_in(cur, allowed), key=lin):
                if q not in dist:
                    dist[q] = dist[cur] + 1
                    nxt.append(q)
        frontier = nxt
    starts = [q for q in _neighbors_in(entry, allowed) if q in dist]
    if not starts:
        return ()
    start = min(starts, key=lambda q: (dist[q], lin(q)))
    path = []
    cur = start
    while cur != center:
        path.append(cur)
        cur = min(
            (q for q in _neighbors_in(cur, allowed) if q in dist and dist[q] == dist[cur] - 1),
            key=lin,
        )
    return tuple(path)


def build_vessel_fused_network(skel: BinaryVolume, centerline: SparseCenterline) -> VesselFusedNetwork:
    """Assemble the global node/trace graph from the skeleton (one-to-one)."""
    sg = classify_voxels(skel)
    radius = centerline.radius_lookup()
    missing = [c for c in sg.degree if c not in radius]
    if missing:
        raise ConsistencyError(f"centerline does not cover skeleton voxel {missing[0]}")

    dims = sg.dims

    def lin(q):
        return linear_index(q[0], q[1], q[2], dims)

    hubs = detect_hubs(sg)
    member_hub = {}
    for hi, hub in enumerate(hubs):
        for m in hub.members:
            member_hub[m] = hi

    endpoint_set = set(sg.endpoints)
    node_voxels = sorted(set(sg.endpoints) | {h.center for h in hubs}, key=lin)
    loop_anchors = []

    # hub-internal member paths are allocated trace by trace so that each
    # member lands in at most one trace interior; starved requests fall back
    # to a direct geometric hop and the leftover members fold into the center
    remaining_by_hub = {hi: set(h.members) - {h.center} for hi, h in enumerate(hubs)}

    def allocate_path(hi, entry):
        path = _internal_path(hubs[hi], entry, remaining_by_hub[hi], dims)
        remaining_by_hub[hi] -= set(path)
        return path

    # attachments: (node voxel, entry voxel) -> how a trace leaves that node
    attachments = []
    for hi, hub in enumerate(hubs):
        for e in hub.hub_endpoints:
            attachments.append((hub.center, e, hi))
    for ep in sg.endpoints:
        if sg.degree[ep] == 1 and sg.adjacency[ep][0] not in member_hub:
            attachments.append((ep, sg.adjacency[ep][0], None))
    attachments.sort(key=lambda a: (lin(a[0]), lin(a[1])))

    used = set()
    raw_traces = []

    def walk(node_voxel, entry, hi):
        pts = [node_voxel]
        incoming = None
        if hi is not None:
            path = allocate_path(hi, entry)
            pts.extend(reversed(path))
            # the member this trace notionally leaves through; with an empty
            # allocation that is the center itself (adjacent entry) or, when
            # starved, the smallest adjacent member, so the first step cannot
            # bounce back into the source hub
            if path:
                incoming = path[0]
            elif hubs[hi].center in sg.adjacency[entry]:
                incoming = hubs[hi].center
            else:
                incoming = min(
                    (q for q in sg.adjacency[entry] if member_hub.get(q) == hi),
                    key=lin,
                )
        pts.append(entry)
        first = True
        while True:
            cur = pts[-1]
            prev = pts[-2]
            if cur in endpoint_set:
                return pts, (cur, prev)
            blocked = incoming if first else prev
            first = False
            nxts = [q for q in sg.adjacency[cur] if q != prev and q != blocked]
            if not nxts:
                return pts, (cur, prev)
            nxt = nxts[0]
            if nxt in member_hub:
                far_hi = member_hub[nxt]
                far_hub = hubs[far_hi]
                pts.extend(allocate_path(far_hi, cur))
                pts.append(far_hub.center)
                return pts, (far_hub.center, cur)
            pts.append(nxt)

    for node_voxel, entry, hi in attachments:
        if (node_voxel, entry) in used:
            continue
        used.add((node_voxel, entry))
        if hi is None and entry in member_hub:
            # endpoint directly against a hub: the hub-side attachment owns it
            continue
        if hi is not None and entry in endpoint_set:
            pts = [node_voxel, *reversed(allocate_path(hi, entry)), entry]
            used.add((entry, pts[-2]))
            raw_traces.append(pts)
            continue
        pts, far = walk(node_voxel, entry, hi)
        if far in used and far != (node_voxel, entry):
            raise ConsistencyError(f"trace passage {far} claimed twice; skeleton decomposition bug")
        used.add(far)
        raw_traces.append(pts)

    # pure degree-2 cycles: synthesize an anchor node and one closed trace
    covered = set()
    for pts in raw_traces:
        covered.update(pts)
    leftover = [c for c in sg.between if c not in covered]
    leftover_set = set(leftover)
    while leftover_set:
        anchor = min(leftover_set, key=lin)
        loop_anchors.append(anchor)
        nbs = sorted(_neighbors_in(anchor, leftover_set), key=lin)
        pts = [anchor]
        prev, cur = anchor, nbs[0]
        while cur != anchor:
            pts.append(cur)
            nxts = [q for q in sg.adjacency[cur] if q != prev]
            prev, cur = cur, nxts[0]
        pts.append(anchor)
        leftover_set -= set(pts)
        raw_traces.append(pts)

    node_voxels = sorted(set(node_voxels) | set(loop_anchors), key=lin)
    node_id = {v: i for i, v in enumerate(node_voxels)}
    center_kind = {}
    center_extra = {}
    for hi, hub in enumerate(hubs):
        center_kind[hub.center] = "junction" if len(hub.members) == 1 else "hub_center"
        center_extra[hub.center] = tuple(sorted(remaining_by_hub[hi], key=lin))
    nodes = []
    for v in node_voxels:
        if v in center_kind:
            kind = center_kind[v]
        elif v in endpoint_set:
            kind = "endpoint"
        else:
            kind = "junction"  # loop anchor
        nodes.append(GraphNode(id=node_id[v], coord=v, kind=kind, extra_voxels=center_extra.get(v, ())))

    traces = []
    for tid, pts in enumerate(raw_traces):
        start, end = node_id[pts[0]], node_id[pts[-1]]
        traces.append(
            Trace(
                id=tid,
                start=start,
                end=end,
                points=tuple(tuple(p) for p in pts),
                radii=tuple(radius[tuple(p)] for p in pts),
                closed=pts[0] == pts[-1],
            )
        )
    return VesselFusedNetwork(nodes=tuple(nodes), traces=tuple(traces), spacing=sg.spacing, dims=sg.dims)


def audit_network(net: VesselFusedNetwork, skel: BinaryVolume = None):
    """Check structural invariants; with a skeleton, also the one-to-one cover.

    Returns the handshake sum; raises ConsistencyError on violation.
    """
    ids = [n.id for n in net.nodes]
    if len(ids) != len(set(ids)):
        raise ConsistencyError("duplicate node ids")
    node_map = net.node_by_id()
    interiors = []
    for t in net.traces:
        if t.start not in node_map or t.end not in node_map:
            raise ConsistencyError(f"trace {t.id} references missing node")
        if t.points[0] != node_map[t.start].coord or t.points[-1] != node_map[t.end].coord:
            raise ConsistencyError(f"trace {t.id} terminals disagree with its nodes")
        interiors.extend(t.interior())
    if len(interiors) != len(set(interiors)):
        raise ConsistencyError("a voxel appears in more than one trace interior")
    node_voxels = set()
    for n in net.nodes:
        node_voxels.add(n.coord)
        node_voxels.update(n.extra_voxels)
    overlap = node_voxels & set(interiors)
    if overlap:
        raise ConsistencyError(f"voxel {next(iter(overlap))} is both node and trace interior")
    handshake = 0
    for t in net.traces:
        handshake += 2
    incident_total = sum(len(v) for v in net.incident_traces().values())
    if incident_total != 2 * len(net.traces):
        raise ConsistencyError("handshake identity violated")
    if skel is not None:
        skel_voxels = {tuple(c) for c in np.argwhere(skel.bits).tolist()}
        cover = node_voxels | set(interiors)
        if cover != skel_voxels:
            missing = skel_voxels - cover
            extra = cover - skel_voxels
            raise ConsistencyError(
                f"one-to-one cover broken: {len(missing)} skeleton voxels uncovered, {len(extra)} foreign"
            )
    return incident_total


def delete_edge(net: VesselFusedNetwork, trace_id: int) -> VesselFusedNetwork:
    """Remove a trace; drop orphaned nodes and dissolve pass-through junctions."""
    by_id = net.trace_by_id()
    if trace_id not in by_id:
        raise GraphEditError(f"unknown trace id {trace_id}")
    traces = [t for t in net.traces if t.id != trace_id]
    nodes = list(net.nodes)
    next_id = max((t.id for t in net.traces), default=-1) + 1
    # a node dissolves only when this deletion turned it into a pass-through;
    # nodes that already carried two traces keep their identity
    pre_counts = {nid: len(v) for nid, v in net.incident_traces().items()}
    protected = {nid for nid, c in pre_counts.items() if c <= 2}

    changed = True
    while changed:
        changed = False
        inc = {}
        for t in traces:
            inc.setdefault(t.start, []).append(t)
            inc.setdefault(t.end, []).append(t)
        for n in sorted(nodes, key=lambda n: n.id):
            tl = inc.get(n.id, [])
            if not tl:
                nodes.remove(n)
                changed = True
                break
            if n.id in protected:
                continue
            if len(tl) == 2 and tl[0].id != tl[1].id and not tl[0].closed and not tl[1].closed:
                t1, t2 = sorted(tl, key=lambda t: t.id)
                p1 = list(t1.points) if t1.end == n.id else list(reversed(t1.points))
                r1 = list(t1.radii) if t1.end == n.id else list(reversed(t1.radii))
                p2 = list(t2.points) if t2.start == n.id else list(reversed(t2.points))
                r2 = list(t2.radii) if t2.start == n.id else list(reversed(t2.radii))
                start = t1.start if t1.end == n.id else t1.end
                end = t2.end if t2.start == n.id else t2.start
                merged = Trace(
                    id=next_id,
                    start=start,
                    end=end,
                    points=tuple(p1 + p2[1:]),
                    radii=tuple(r1 + r2[1:]),
                    closed=start == end,
                )
                next_id += 1
                traces = [t for t in traces if t.id not in (t1.id, t2.id)] + [merged]
                nodes.remove(n)
                changed = True
                break
    traces.sort(key=lambda t: t.id)
    return VesselFusedNetwork(nodes=tuple(nodes), traces=tuple(traces), spacing=net.spacing, dims=net.dims)


def _shortest_path(net: VesselFusedNetwork, src: int, dst: int):
    """Dijkstra by physical length; ties resolved by lexicographic node-id
    sequence, then trace-id sequence.  Returns (node path, trace path) or None."""
    adj = {n.id: [] for n in net.nodes}
    for t in net.traces:
        if t.closed:
            continue
        length = net.trace_length_mm(t)
        adj[t.start].append((t.end, length, t.id))
        adj[t.end].append((t.start, length, t.id))
    for v in adj.values():
        v.sort(key=lambda e: (e[2],))
    best = {}
    heap = [(0.0, (src,), (), src)]
    while heap:
        dist, npath, tpath, cur = heapq.heappop(heap)
        if cur in best:
            continue
        best[cur] = (dist, npath, tpath)
        if cur == dst:
            return npath, tpath
        for nxt, length, tid in adj[cur]:
            if nxt in best or nxt in npath:
                continue
            heapq.heappush(heap, (dist + length, npath + (nxt,), tpath + (tid,), nxt))
    return None


def apply_landmarks(net: VesselFusedNetwork, lm: LandmarkSet, config: ClassificationConfig = None) -> DynamicGraphTable:
    """Resolve landmarks into the dynamic graph table.

    Deleted edges are removed first; proximal segments are named as the unique
    shortest (physical length) path between their defining landmarks; fault
    tolerant arteries whose landmarks are unassigned, unconnected, or whose
    path would cross another assigned landmark are marked absent; traces
    reachable beyond a gateway landmark join that side's distal subnetwork.
    """
    config = config or DEFAULT_CONFIG
    for label in lm.assignments:
        if label not in config.labels:
            raise UnknownLabelError(f"label '{label}' is not canonical")
    for tid in lm.deleted_edges:
        net = delete_edge(net, tid)
    node_ids = {n.id for n in net.nodes}
    for label, nid in lm.assignments.items():
        if nid not in node_ids:
            raise UnknownLabelError(f"landmark '{label}' references missing node id {nid}")
    missing = [l for l in config.mandatory_labels() if l not in lm.assignments]
    if missing:
        raise IncompleteLandmarkError(missing)

    assigned_nodes = {label: nid for label, nid in lm.assignments.items()}
    landmark_of_node = {nid: label for label, nid in assigned_nodes.items()}

    segments = {}
    paths = {}
    presence = {}
    claimed = {}
    for seg in config.segments:
        have = seg.start in assigned_nodes and seg.end in assigned_nodes
        result = None
        if have:
            result = _shortest_path(net, assigned_nodes[seg.start], assigned_nodes[seg.end])
        if seg.fault_tolerant:
            absent = result is None
            if result is not None:
                interior_landmarks = [
                    landmark_of_node[nid]
                    for nid in result[0][1:-1]
                    if nid in landmark_of_node and landmark_of_node[nid] not in seg.via
                ]
                if interior_landmarks:
                    absent = True
            presence[seg.name] = not absent
            if absent:
                segments[seg.name] = ()
                paths[seg.name] = ()
                continue
        elif result is None:
            raise ConsistencyError(
                f"mandatory segment '{seg.name}' has no path between its landmarks"
            )
        npath, tpath = result
        for tid in tpath:
            if tid in claimed and claimed[tid] != seg.name:
                raise AmbiguousSegmentError(
                    f"trace {tid} claimed by both '{claimed[tid]}' and '{seg.name}'"
                )
            claimed[tid] = seg.name
        segments[seg.name] = tuple(tpath)
        paths[seg.name] = tuple(npath)

    proximal_traces = set(claimed)
    inc = net.incident_traces()
    trace_map = net.trace_by_id()
    subnetworks = {name: [] for _, name in config.gateways}
    roots = {name: [] for _, name in config.gateways}
    distal_claimed = set()
    for label, subnet in config.gateways:
        gate = assigned_nodes.get(label)
        if gate is None:
            continue
        roots[subnet].append(gate)
        frontier = [gate]
        seen_nodes = {gate}
        while frontier:
            nid = frontier.pop(0)
            for tid in sorted(inc.get(nid, [])):
                if tid in proximal_traces or tid in distal_claimed:
                    continue
                distal_claimed.add(tid)
                subnetworks[subnet].append(tid)
                t = trace_map[tid]
                other = t.end if t.start == nid else t.start
                if other in seen_nodes or other in landmark_of_node:
                    continue
                seen_nodes.add(other)
                frontier.append(other)
    table_subnets = {name: tuple(sorted(tids)) for name, tids in subnetworks.items()}
    table_subnets["Proximal"] = tuple(sorted(proximal_traces))
    table_subnets["Distal"] = tuple(sorted(distal_claimed))
    roots = {name: tuple(r) for name, r in roots.items()}
    return DynamicGraphTable(
        segments=segments,
        presence=presence,
        subnetworks=table_subnets,
        paths=paths,
        roots=roots,
        net=net,
    )


@dataclass(frozen=True)
class GuidePackage:
    """Axis-aligned maximum intensity projections with projected node markers."""

    mips: dict  # axis name -> 2D array
    node_projections: dict  # axis name -> tuple of (node id, u, v)
    dims: tuple

    _AXES = (("x", 1, 2), ("y", 0, 2), ("z", 0, 1))


def labeling_guide(vol: Volume3D, net: VesselFusedNetwork) -> GuidePackage:
    """MIPs along the three axes plus node coordinates projected into each view."""
    mips = {}
    projections = {}
    for axis_name, u_ax, v_ax in GuidePackage._AXES:
        axis = "xyz".index(axis_name)
        mips[axis_name] = np.asarray(vol.data.max(axis=axis), dtype=np.float32)
        projections[axis_name] = tuple((n.id, int(n.coord[u_ax]), int(n.coord[v_ax])) for n in net.nodes)
    return GuidePackage(mips=mips, node_projections=projections, dims=vol.dims)


# --- serialization -----------------------------------------------------------


def network_to_json(net: VesselFusedNetwork) -> dict:
    return {
        "nodes": [
            {
                "id": n.id,
                "xyz": list(n.coord),
                "kind": n.kind,
                **({"extra": [list(v) for v in n.extra_voxels]} if n.extra_voxels else {}),
            }
            for n in net.nodes
        ],
        "traces": [
            {
                "id": t.id,
                "start": t.start,
                "end": t.end,
                "points": [[int(p[0]), int(p[1]), int(p[2]), float(r)] for p, r in zip(t.points, t.radii)],
                **({"closed": True} if t.closed else {}),
            }
            for t in net.traces
        ],
        "spacing": list(net.spacing),
        **({"dims": list(net.dims)} if net.dims else {}),
    }


def network_from_json(doc: dict) -> VesselFusedNetwork:
    nodes = tuple(
        GraphNode(
            id=int(n["id"]),
            coord=tuple(int(v) for v in n["xyz"]),
            kind=n["kind"],
            extra_voxels=tuple(tuple(int(c) for c in v) for v in n.get("extra", ())),
        )
        for n in doc["nodes"]
    )
    traces = tuple(
        Trace(
            id=int(t["id"]),
            start=int(t["start"]),
            end=int(t["end"]),
            points=tuple((int(p[0]), int(p[1]), int(p[2])) for p in t["points"]),
            radii=tuple(float(p[3]) for p in t["points"]),
            closed=bool(t.get("closed", False)),
        )
        for t in doc["traces"]
    )
    dims = tuple(int(d) for d in doc["dims"]) if "dims" in doc else None
    return VesselFusedNetwork(nodes=nodes, traces=traces, spacing=tuple(doc["spacing"]), dims=dims)


def landmarks_to_json(lm: LandmarkSet) -> dict:
    return {"assignments": dict(lm.assignments), "deleted_edges": list(lm.deleted_edges), "version": lm.version}


def landmarks_from_json(doc: dict, net: VesselFusedNetwork = None) -> LandmarkSet:
    """Parse a landmark file; `assignment_coords` entries (label -> voxel xyz)
    are resolved to the nearest network node when `net` is given."""
    assignments = {str(k): int(v) for k, v in doc.get("assignments", {}).items()}
    coords = doc.get("assignment_coords", {})
    if coords:
        if net is None:
            raise ConsistencyError("assignment_coords requires the network to resolve against")
        # isolated noise specks carry no traces; never resolve a landmark there
        inc = net.incident_traces()
        nodes = [n for n in net.nodes if inc.get(n.id)]
        node_arr = np.array([n.coord for n in nodes], dtype=np.float64)
        ids = [n.id for n in nodes]
        for label, xyz in coords.items():
            if label in assignments:
                continue
            d = np.sqrt(((node_arr - np.asarray(xyz, dtype=np.float64)) ** 2).sum(axis=1))
            assignments[str(label)] = ids[int(np.argmin(d))]
    return LandmarkSet(
        assignments=assignments,
        deleted_edges=tuple(int(t) for t in doc.get("deleted_edges", ())),
        version=int(doc.get("version", 1)),
    )
