"""Synthetic artery generation with analytically known ground-truth features.

Each artery is a 1D in-plane signal stored as truncated Fourier coefficients
of the chord residual versus normalized arclength s in [0, 1]: the dictionary
entry is dimensionless and landmark-independent, so one shape can synthesize
arteries between any landmark pair.  Orientation embeds the signal in 3D on a
plane through the chord, applies a seeded random roll about the chord, and
pins the endpoints exactly onto the landmarks.  Rasterization sweeps a
capsule with linearly interpolated radius; ground-truth tortuosity and length
come from the continuous trace before rasterization.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import features as feat
from .errors import ConsistencyError, OutOfBoundsError, ParameterError
from .features import FeatureRow
from .volume import BinaryVolume, Volume3D


@dataclass(frozen=True)
class FourierArtery:
    """Truncated Fourier coefficients [a0, a_1..a_K, b_1..b_K] per in-plane
    coordinate, parameterized by normalized arclength."""

    order: int
    coeffs_u: np.ndarray
    coeffs_v: np.ndarray

    def __post_init__(self):
        cu = np.asarray(self.coeffs_u, dtype=np.float64)
        cv = np.asarray(self.coeffs_v, dtype=np.float64)
        n = 2 * self.order + 1
        if cu.shape != (n,) or cv.shape != (n,):
            raise ParameterError(f"coefficient vectors must have length {n}")
        if not (np.isfinite(cu).all() and np.isfinite(cv).all()):
            raise ParameterError("coefficients must be finite")
        object.__setattr__(self, "coeffs_u", cu)
        object.__setattr__(self, "coeffs_v", cv)


@dataclass(frozen=True)
class OrientationPlane:
    """Orthonormal in-plane basis through the artery origin."""

    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    jitter_angle: float = 0.0

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if abs(np.linalg.norm(u) - 1) > 1e-9 or abs(np.linalg.norm(v) - 1) > 1e-9 or abs(float(u @ v)) > 1e-9:
            raise ParameterError("plane basis must be orthonormal")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class RadiusProfile:
    """Radius samples r(s) in mm at uniform s; linearly interpolated."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if s.size < 2:
            raise ParameterError("radius profile needs at least 2 samples")
        if s.min() <= 0:
            raise ParameterError("radius profile must be positive")
        object.__setattr__(self, "samples", s)

    def at(self, s):
        grid = np.linspace(0.0, 1.0, self.samples.size)
        return np.interp(s, grid, self.samples)


def _design_matrix(params, order):
    cols = [np.ones_like(params)]
    for k in range(1, order + 1):
        cols.append(np.cos(2 * math.pi * k * params))
    for k in range(1, order + 1):
        cols.append(np.sin(2 * math.pi * k * params))
    return np.stack(cols, axis=1)


def encode_fourier(curve2d, order: int, params=None) -> FourierArtery:
    """Least-squares Fourier fit of a sampled in-plane curve.

    Sample parameters default to a uniform grid on [0, 1] (samples assumed
    equispaced in arclength).
    """
    curve = np.asarray(curve2d, dtype=np.float64)
    if curve.ndim != 2 or curve.shape[1] != 2:
        raise ParameterError(f"curve must be (n, 2), got {curve.shape}")
    n = curve.shape[0]
    if n < 2 * order + 1:
        raise ParameterError(f"underdetermined fit: {n} samples for order {order} (need {2 * order + 1})")
    if params is None:
        params = np.linspace(0.0, 1.0, n)
    A = _design_matrix(np.asarray(params, dtype=np.float64), order)
    cu, *_ = np.linalg.lstsq(A, curve[:, 0], rcond=None)
    cv, *_ = np.linalg.lstsq(A, curve[:, 1], rcond=None)
    return FourierArtery(order=order, coeffs_u=cu, coeffs_v=cv)


def decode_fourier(fa: FourierArtery, n_samples: int):
    """Evaluate the truncated series at uniform s; values at shared s agree
    for any sampling count."""
    if n_samples < 2:
        raise ParameterError("n_samples must be >= 2")
    s = np.linspace(0.0, 1.0, n_samples)
    A = _design_matrix(s, fa.order)
    return np.stack([A @ fa.coeffs_u, A @ fa.coeffs_v], axis=1)


def make_plane(start, end, reference=(0.0, 0.0, 1.0)) -> OrientationPlane:
    """Plane through the chord: u along the chord, v the reference direction
    orthogonalized against it."""
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    chord = end - start
    norm = np.linalg.norm(chord)
    if norm == 0:
        raise ParameterError("degenerate plane: start equals end")
    u = chord / norm
    ref = np.asarray(reference, dtype=np.float64)
    v = ref - (ref @ u) * u
    if np.linalg.norm(v) < 1e-8:
        ref = np.array([0.0, 1.0, 0.0])
        v = ref - (ref @ u) * u
        if np.linalg.norm(v) < 1e-8:
            ref = np.array([1.0, 0.0, 0.0])
            v = ref - (ref @ u) * u
    v = v / np.linalg.norm(v)
    return OrientationPlane(origin=start, u=u, v=v)


def orient_trace(fa: FourierArtery, plane: OrientationPlane, start, end, rng, n_samples=200):
    """Embed the decoded signal between two landmarks.

    The in-plane residual (in chord-length units) rides on the straight chord;
    a seeded roll of the bending direction about the chord realizes the random
    rotational factor, and a linear blend removes the residual's endpoint
    values so the trace hits the landmarks exactly.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    chord = end - start
    length = float(np.linalg.norm(chord))
    if length == 0:
        raise ParameterError("start and end landmarks coincide")
    theta = float(rng.uniform(-plane.jitter_angle, plane.jitter_angle)) if plane.jitter_angle else 0.0
    u, v = plane.u, plane.v
    w = np.cross(u, v)
    v_rolled = v * math.cos(theta) + w * math.sin(theta)
    res = decode_fourier(fa, n_samples)
    s = np.linspace(0.0, 1.0, n_samples)
    pts = start + np.outer(s, chord) + length * (np.outer(res[:, 0], u) + np.outer(res[:, 1], v_rolled))
    pts = pts - np.outer(1 - s, pts[0] - start) - np.outer(s, pts[-1] - end)
    return pts


def chain_voxels(trace, dims, spacing, prune26=False):
    """Nearest-voxel chain under the trace (quarter-voxel sampling).

    With prune26, redundant voxels are removed until consecutive chain voxels
    are 26-neighbors and no interior voxel can be dropped, giving a digital
    curve with the same density as a thinned skeleton (used for ground-truth
    box counting).
    """
    pts = np.asarray(trace, dtype=np.float64)
    step = min(spacing) / 4.0
    samples = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg = np.linalg.norm(b - a)
        n = max(1, int(math.ceil(seg / step)))
        for i in range(1, n + 1):
            samples.append(a + (b - a) * (i / n))
    arr = np.asarray(samples)
    vox = np.rint(arr / np.asarray(spacing)).astype(np.int64)
    vox = np.clip(vox, 0, np.asarray(dims) - 1)
    if not prune26:
        return np.unique(vox, axis=0)
    seq = [tuple(vox[0])]
    for v in map(tuple, vox[1:]):
        if v != seq[-1]:
            seq.append(v)
    changed = True
    while changed:
        changed = False
        out = [seq[0]]
        i = 1
        while i < len(seq) - 1:
            prev, cur, nxt = out[-1], seq[i], seq[i + 1]
            if max(abs(prev[0] - nxt[0]), abs(prev[1] - nxt[1]), abs(prev[2] - nxt[2])) <= 1:
                changed = True  # cur is redundant for 26-connectivity
            else:
                out.append(cur)
            i += 1
        out.append(seq[-1])
        seq = out
    return np.unique(np.asarray(seq, dtype=np.int64), axis=0)


def rasterize_tube(trace, radii, dims, spacing) -> BinaryVolume:
    """Capsule-union rasterization: a voxel is foreground iff its center lies
    within the locally interpolated radius of the centerline; the nearest
    voxel chain is always set so sub-voxel arteries stay connected."""
    pts = np.asarray(trace, dtype=np.float64)
    r = np.asarray(radii, dtype=np.float64)
    if pts.shape[0] != r.shape[0]:
        raise ParameterError("radii must match trace points")
    dims = tuple(int(d) for d in dims)
    spacing = tuple(float(s) for s in spacing)
    sp = np.asarray(spacing)
    lo_bound = -0.5 * sp
    hi_bound = (np.asarray(dims) - 0.5) * sp
    for i, (p, ri) in enumerate(zip(pts, r)):
        if np.any(p - ri < lo_bound) or np.any(p + ri > hi_bound):
            raise OutOfBoundsError(f"trace point {i} at {p} with radius {ri} exits the grid", index=i)
    bits = np.zeros(dims, dtype=bool)
    for i in range(len(pts) - 1):
        p0, p1 = pts[i], pts[i + 1]
        r0, r1 = r[i], r[i + 1]
        rmax = max(r0, r1)
        lo = np.floor((np.minimum(p0, p1) - rmax) / sp).astype(int)
        hi = np.ceil((np.maximum(p0, p1) + rmax) / sp).astype(int)
        lo = np.maximum(lo, 0)
        hi = np.minimum(hi, np.asarray(dims) - 1)
        if np.any(lo > hi):
            continue
        xs = np.arange(lo[0], hi[0] + 1) * sp[0]
        ys = np.arange(lo[1], hi[1] + 1) * sp[1]
        zs = np.arange(lo[2], hi[2] + 1) * sp[2]
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        d = p1 - p0
        dd = float(d @ d)
        if dd == 0:
            t = np.zeros_like(gx)
        else:
            t = ((gx - p0[0]) * d[0] + (gy - p0[1]) * d[1] + (gz - p0[2]) * d[2]) / dd
            t = np.clip(t, 0.0, 1.0)
        cx = p0[0] + t * d[0]
        cy = p0[1] + t * d[1]
        cz = p0[2] + t * d[2]
        dist2 = (gx - cx) ** 2 + (gy - cy) ** 2 + (gz - cz) ** 2
        rloc = r0 + t * (r1 - r0)
        inside = dist2 <= rloc**2
        bits[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1] |= inside
    chain = chain_voxels(pts, dims, spacing)
    bits[chain[:, 0], chain[:, 1], chain[:, 2]] = True
    return BinaryVolume(bits=bits, spacing=spacing)


def ground_truth_features(trace, radii, dims=None, spacing=None, name="artery") -> FeatureRow:
    """Features of the continuous trace via the same formulas as extraction;
    the fractal dimension box-counts the rasterized centerline chain."""
    pts = np.asarray(trace, dtype=np.float64)
    r = np.asarray(radii, dtype=np.float64)
    fd = None
    if dims is not None and spacing is not None:
        vox = chain_voxels(pts, dims, spacing)
        if len(vox) >= 2:
            try:
                fd = feat.fractal_dimension(vox, dims)
            except Exception:
                fd = None
    return FeatureRow(
        artery=name,
        total_length=feat.polyline_length(pts),
        mean_radius=float(r.mean()),
        total_volume=feat.segment_volume(pts, r),
        branch_count=1,
        mean_section_area=feat.mean_section_area(r),
        surface_area=feat.surface_area(pts, r),
        tortuosity=feat.tortuosity(pts),
        fractal_dimension=fd,
        present=True,
    )


@dataclass
class GroundTruth:
    """Analytic per-artery features plus the generating graph bookkeeping."""

    rows: list
    landmarks_mm: dict
    assignable_labels: tuple
    expected_nodes: int
    expected_traces: int
    seed: int
    spacing: tuple
    dims: tuple


def _artery_rng(seed, name):
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    key = int.from_bytes(digest[:4], "little")
    ss = np.random.SeedSequence([int(seed) & 0x7FFFFFFF, key])
    return np.random.default_rng(ss)


def _contract_degree2(nodes, edges):
    """Expected (node, trace) counts after dissolving pass-through points."""
    degree = {n: 0 for n in nodes}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    keep = {n for n, d in degree.items() if d != 2}
    adj = {n: [] for n in nodes}
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    seen_edges = set()
    merged = 0
    for n in sorted(keep):
        for other, ei in adj[n]:
            if ei in seen_edges:
                continue
            seen_edges.add(ei)
            prev, cur = n, other
            while cur not in keep:
                nxt = [(q, j) for q, j in adj[cur] if j not in seen_edges]
                if not nxt:
                    break
                q, j = nxt[0]
                seen_edges.add(j)
                prev, cur = cur, q
            merged += 1
    # pure cycles (all degree 2) each contribute one synthesized node + trace
    leftover = {i for i in range(len(edges))} - seen_edges
    cycle_nodes = 0
    while leftover:
        i = leftover.pop()
        a, b = edges[i]
        cycle_nodes += 1
        merged += 1
        frontier = [a, b]
        while frontier:
            n = frontier.pop()
            for q, j in adj[n]:
                if j in leftover:
                    leftover.discard(j)
                    frontier.append(q)
    return len(keep) + cycle_nodes, merged


def simulate_subject(landmarks, fbd, config, seed=None):
    """Generate (Volume3D, BinaryVolume, GroundTruth) from a landmark set, a
    Fourier basis dictionary and a simulation config.

    `landmarks` maps point names to mm coordinates (canonical landmark labels
    plus any distal tree points).  Arteries connect named points, carry a
    radius profile, and optionally report under an aggregate segment name
    and/or a distal subnetwork.
    """
    if seed is None:
        seed = int(config.get("seed", 0))
    dims = tuple(int(d) for d in config["grid"]["dims"])
    spacing_val = config["grid"]["spacing"]
    spacing = tuple(spacing_val) if isinstance(spacing_val, (list, tuple)) else (float(spacing_val),) * 3
    jitter = math.radians(float(config.get("jitter_deg", 10.0)))
    sample_step = float(config.get("sample_step_mm", min(spacing) / 2.0))
    arteries = config["arteries"]

    pieces = {}
    bits = np.zeros(dims, dtype=bool)
    edges = []
    for spec_i, art in enumerate(arteries):
        name = art["name"]
        start = np.asarray(landmarks[art["start"]], dtype=np.float64)
        end = np.asarray(landmarks[art["end"]], dtype=np.float64)
        fa = fbd[art["fbd_key"]]
        chord = float(np.linalg.norm(end - start))
        n_samples = max(16, int(round(chord / sample_step)) + 1)
        plane = make_plane(start, end, reference=tuple(art.get("normal", (0.0, 0.0, 1.0))))
        plane = OrientationPlane(origin=plane.origin, u=plane.u, v=plane.v, jitter_angle=jitter)
        rng = _artery_rng(seed, name)
        trace = orient_trace(fa, plane, start, end, rng, n_samples=n_samples)
        radius = art["radius"]
        if isinstance(radius, (int, float)):
            profile = RadiusProfile(samples=np.array([float(radius)] * 2))
        else:
            profile = RadiusProfile(samples=np.asarray(radius, dtype=np.float64))
        s = np.linspace(0.0, 1.0, n_samples)
        radii = profile.at(s)
        tube = rasterize_tube(trace, radii, dims, spacing)
        bits |= tube.bits
        pieces[name] = {
            "trace": trace,
            "radii": radii,
            "chain": chain_voxels(trace, dims, spacing, prune26=True),
            "spec": art,
        }
        edges.append((art["start"], art["end"]))

    node_names = sorted({e for pair in edges for e in pair})
    expected_nodes, expected_traces = _contract_degree2(node_names, edges)

    rows = _ground_truth_rows(pieces, arteries, dims, spacing, landmarks)

    degree = {n: 0 for n in node_names}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    assignable = tuple(
        label for label in landmarks if label in degree and degree[label] != 2
    )

    rng_noise = np.random.Generator(np.random.Philox(key=seed))
    intensity = config.get("intensity", {})
    mu_b = float(intensity.get("mu_b", 100.0))
    sigma_b = float(intensity.get("sigma_b", 10.0))
    mu_v = float(intensity.get("mu_v", 150.0))
    sigma_v = float(intensity.get("sigma_v", 10.0))
    noise = rng_noise.standard_normal(dims)
    data = np.where(bits, mu_v + sigma_v * noise, mu_b + sigma_b * noise).astype(np.float32)

    vol = Volume3D(data=data, spacing=spacing)
    binary = BinaryVolume(bits=bits, spacing=spacing)
    truth = GroundTruth(
        rows=rows,
        landmarks_mm={k: list(map(float, v)) for k, v in landmarks.items()},
        assignable_labels=assignable,
        expected_nodes=expected_nodes,
        expected_traces=expected_traces,
        seed=seed,
        spacing=spacing,
        dims=dims,
    )
    return vol, binary, truth


def _chain_pieces(piece_list):
    """Order arterial pieces head-to-tail and return the joined polyline."""
    remaining = list(piece_list)
    ordered = [remaining.pop(0)]
    changed = True
    while remaining and changed:
        changed = False
        for i, item in enumerate(list(remaining)):
            if np.allclose(item["trace"][0], ordered[-1]["trace"][-1]):
                ordered.append(remaining.pop(i))
                changed = True
                break
            if np.allclose(item["trace"][-1], ordered[0]["trace"][0]):
                ordered.insert(0, remaining.pop(i))
                changed = True
                break
            if np.allclose(item["trace"][-1], ordered[-1]["trace"][-1]):
                flipped = dict(item)
                flipped["trace"] = item["trace"][::-1]
                flipped["radii"] = item["radii"][::-1]
                ordered.append(flipped)
                remaining.pop(i)
                changed = True
                break
            if np.allclose(item["trace"][0], ordered[0]["trace"][0]):
                flipped = dict(item)
                flipped["trace"] = item["trace"][::-1]
                flipped["radii"] = item["radii"][::-1]
                ordered.insert(0, flipped)
                remaining.pop(i)
                changed = True
                break
    if remaining:
        return None
    pts = ordered[0]["trace"]
    for item in ordered[1:]:
        pts = np.vstack([pts, item["trace"][1:]])
    return pts


def _longest_root_to_leaf_gt(group, landmarks, roots):
    """Longest continuous root-to-leaf polyline through a distal tree."""
    by_endpoint = {}
    for item in group:
        a, b = item["spec"]["start"], item["spec"]["end"]
        by_endpoint.setdefault(a, []).append((b, item, False))
        by_endpoint.setdefault(b, []).append((a, item, True))
    best = (None, -1.0)
    for root in roots:
        if root not in by_endpoint:
            continue
        stack = [(root, (), 0.0, frozenset())]
        while stack:
            node, path, length, seen = stack.pop()
            extended = False
            for other, item, flip in by_endpoint.get(node, []):
                key = id(item)
                if key in seen:
                    continue
                stack.append(
                    (other, path + ((item, flip),), length + feat.polyline_length(item["trace"]), seen | {key})
                )
                extended = True
            if not extended and path and length > best[1]:
                best = (path, length)
    if best[0] is None:
        return None
    pts = None
    for item, flip in best[0]:
        tr = item["trace"][::-1] if flip else item["trace"]
        pts = tr if pts is None else np.vstack([pts, tr[1:]])
    return pts


def _ground_truth_rows(pieces, arteries, dims, spacing, landmarks):
    groups = {}
    subnet_groups = {}
    subnet_roots = {}
    for art in arteries:
        item = pieces[art["name"]]
        report = art.get("report_as", art["name"])
        subnet = art.get("subnetwork")
        if subnet:
            subnet_groups.setdefault(subnet, []).append(item)
            if "root" in art:
                subnet_roots.setdefault(subnet, set()).add(art["root"])
        else:
            groups.setdefault(report, []).append(item)

    # expected branch counts after degree-2 dissolution: recompute per group
    degree = {}
    for art in arteries:
        for e in (art["start"], art["end"]):
            degree[e] = degree.get(e, 0) + 1

    def merged_branches(group):
        n = len(group)
        internal = {}
        for item in group:
            for e in (item["spec"]["start"], item["spec"]["end"]):
                internal[e] = internal.get(e, 0) + 1
        # a shared point interior to the group dissolves when its global degree is 2
        dissolved = sum(1 for e, c in internal.items() if c == 2 and degree.get(e) == 2)
        return n - dissolved

    rows = []
    for name, group in groups.items():
        pts_all = [item["trace"] for item in group]
        radii_all = np.concatenate([item["radii"] for item in group])
        chain = np.unique(np.vstack([item["chain"] for item in group]), axis=0)
        joined = _chain_pieces(group) if len(group) > 1 else group[0]["trace"]
        tort = feat.tortuosity(joined) if joined is not None else None
        fd = feat.fractal_dimension(chain, dims) if len(chain) >= 2 else None
        rows.append(
            FeatureRow(
                artery=name,
                total_length=feat.total_length(pts_all),
                mean_radius=float(radii_all.mean()),
                total_volume=sum(feat.segment_volume(i["trace"], i["radii"]) for i in group),
                branch_count=merged_branches(group),
                mean_section_area=feat.mean_section_area(radii_all),
                surface_area=sum(feat.surface_area(i["trace"], i["radii"]) for i in group),
                tortuosity=tort,
                fractal_dimension=fd,
            )
        )
    proximal_items = [i for g in groups.values() for i in g]
    distal_items = [i for g in subnet_groups.values() for i in g]
    for subnet, group in subnet_groups.items():
        radii_all = np.concatenate([item["radii"] for item in group])
        chain = np.unique(np.vstack([item["chain"] for item in group]), axis=0)
        roots = sorted(subnet_roots.get(subnet, ()))
        tort_pts = _longest_root_to_leaf_gt(group, landmarks, roots)
        rows.append(
            FeatureRow(
                artery=subnet,
                total_length=feat.total_length([i["trace"] for i in group]),
                mean_radius=float(radii_all.mean()),
                total_volume=sum(feat.segment_volume(i["trace"], i["radii"]) for i in group),
                branch_count=merged_branches(group),
                mean_section_area=feat.mean_section_area(radii_all),
                surface_area=sum(feat.surface_area(i["trace"], i["radii"]) for i in group),
                tortuosity=feat.tortuosity(tort_pts) if tort_pts is not None else None,
                fractal_dimension=feat.fractal_dimension(chain, dims) if len(chain) >= 2 else None,
            )
        )
    for agg_name, items in (("Proximal", proximal_items), ("Distal", distal_items)):
        if not items:
            continue
        radii_all = np.concatenate([i["radii"] for i in items])
        chain = np.unique(np.vstack([i["chain"] for i in items]), axis=0)
        rows.append(
            FeatureRow(
                artery=agg_name,
                total_length=feat.total_length([i["trace"] for i in items]),
                mean_radius=float(radii_all.mean()),
                total_volume=sum(feat.segment_volume(i["trace"], i["radii"]) for i in items),
                branch_count=merged_branches(items),
                mean_section_area=feat.mean_section_area(radii_all),
                surface_area=sum(feat.surface_area(i["trace"], i["radii"]) for i in items),
                tortuosity=None,
                fractal_dimension=feat.fractal_dimension(chain, dims) if len(chain) >= 2 else None,
            )
        )
    return rows


def load_fbd(path) -> dict:
    """Read a Fourier basis dictionary file."""
    with open(path) as fh:
        raw = json.load(fh)
    out = {}
    for key, entry in raw["entries"].items():
        out[key] = FourierArtery(
            order=int(entry["order"]),
            coeffs_u=np.asarray(entry["coeffs_u"], dtype=np.float64),
            coeffs_v=np.asarray(entry["coeffs_v"], dtype=np.float64),
        )
    return out


def save_fbd(fbd: dict, path):
    doc = {
        "entries": {
            key: {
                "order": fa.order,
                "coeffs_u": list(map(float, fa.coeffs_u)),
                "coeffs_v": list(map(float, fa.coeffs_v)),
            }
            for key, fa in fbd.items()
        }
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
