"""Per-artery morphometric features and comparison statistics.

All geometric features work on physical-space polylines: (n, 3) point arrays
in mm with per-point radii.  Cross-sections are circular and inter-point
solids are truncated cones, consistent with the frustum volume model; the
fractal dimension uses origin-anchored dyadic box counting over the voxel
grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as t_dist

from .errors import InsufficientScalesError, ParameterError, UndefinedTortuosityError

FEATURE_COLUMNS = (
    "total_length_mm",
    "mean_radius_mm",
    "total_volume_mm3",
    "branch_count",
    "mean_section_area_mm2",
    "surface_area_mm2",
    "tortuosity",
    "fractal_dimension",
)


@dataclass
class FeatureRow:
    """The eight extracted features for one named artery or subnetwork."""

    artery: str
    total_length: float = None
    mean_radius: float = None
    total_volume: float = None
    branch_count: int = None
    mean_section_area: float = None
    surface_area: float = None
    tortuosity: float = None
    fractal_dimension: float = None
    present: bool = True

    def values(self):
        return (
            self.total_length,
            self.mean_radius,
            self.total_volume,
            self.branch_count,
            self.mean_section_area,
            self.surface_area,
            self.tortuosity,
            self.fractal_dimension,
        )

    def validate(self):
        """Sanity checks; meaningful only for present rows."""
        if not self.present:
            return
        if self.total_length < 0 or self.total_volume < 0:
            raise ParameterError(f"{self.artery}: negative length or volume")
        if self.tortuosity is not None and self.tortuosity < 1.0 - 1e-9:
            raise ParameterError(f"{self.artery}: tortuosity {self.tortuosity} < 1")
        if self.fractal_dimension is not None and not 0.8 <= self.fractal_dimension <= 3.2:
            raise ParameterError(f"{self.artery}: fractal dimension {self.fractal_dimension} out of band")


@dataclass(frozen=True)
class ComparisonReport:
    """Percent differences plus Pearson and Welch t statistics."""

    percent_diff: np.ndarray
    pearson_r: float
    pearson_p: float
    t_stat: float
    t_p: float
    t_df: float

    def to_json(self):
        return {
            "percent_diff": [None if not np.isfinite(v) else float(v) for v in self.percent_diff],
            "pearson_r": self.pearson_r,
            "pearson_p": self.pearson_p,
            "t_stat": self.t_stat,
            "t_p": self.t_p,
            "t_df": self.t_df,
        }


def _as_polyline(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ParameterError(f"polyline must be (n, 3), got {pts.shape}")
    return pts


def polyline_length(points) -> float:
    pts = _as_polyline(points)
    if len(pts) < 2:
        return 0.0
    return float(np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1)).sum())


def total_length(traces) -> float:
    """Sum of polyline lengths over an artery's traces (mm).

    Single-point traces contribute zero.
    """
    total = 0.0
    for points in traces:
        total += polyline_length(points)
    return total


def segment_volume(points, radii) -> float:
    """Truncated-cone (frustum) volume along one trace:
    sum of (pi*h/3) * (r1^2 + r1*r2 + r2^2) over consecutive point pairs."""
    pts = _as_polyline(points)
    r = np.asarray(radii, dtype=np.float64)
    if r.shape[0] != pts.shape[0]:
        raise ParameterError("radii must match points")
    bad = np.nonzero(r <= 0)[0]
    if bad.size:
        raise ParameterError(f"nonpositive radius at point index {int(bad[0])}")
    if len(pts) < 2:
        return 0.0
    h = np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1))
    r1, r2 = r[:-1], r[1:]
    return float((math.pi / 3.0) * np.sum(h * (r1**2 + r1 * r2 + r2**2)))


def mean_section_area(radii) -> float:
    """Mean circular cross-section pi*r^2 over trace points."""
    r = np.asarray(radii, dtype=np.float64)
    if r.size == 0:
        raise ParameterError("mean_section_area needs at least one radius")
    if r.min() <= 0:
        raise ParameterError("radii must be positive")
    return float(np.mean(math.pi * r**2))


def surface_area(points, radii) -> float:
    """Lateral frustum area pi*(r1+r2)*slant over consecutive point pairs."""
    pts = _as_polyline(points)
    r = np.asarray(radii, dtype=np.float64)
    if r.shape[0] != pts.shape[0]:
        raise ParameterError("radii must match points")
    if r.size and r.min() <= 0:
        raise ParameterError("radii must be positive")
    if len(pts) < 2:
        return 0.0
    h = np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1))
    r1, r2 = r[:-1], r[1:]
    slant = np.sqrt(h**2 + (r1 - r2) ** 2)
    return float(math.pi * np.sum((r1 + r2) * slant))


def branch_count(trace_ids) -> int:
    """Number of arterial segments (traces) belonging to the artery."""
    return len(tuple(trace_ids))


def tortuosity(points) -> float:
    """Path length over endpoint chord; undefined for closed paths."""
    pts = _as_polyline(points)
    if len(pts) < 2:
        raise UndefinedTortuosityError("tortuosity needs at least two points")
    chord = float(np.sqrt(((pts[-1] - pts[0]) ** 2).sum()))
    if chord == 0.0:
        raise UndefinedTortuosityError("closed path: start equals end")
    return polyline_length(pts) / chord


def box_count_scales(dims):
    """Dyadic box sizes 2^0 .. 2^(floor(log2(min dim)) - 1)."""
    m = int(min(dims))
    if m < 2:
        return []
    top = int(math.floor(math.log2(m)))
    return [2**j for j in range(top)]


def fractal_dimension(voxels, dims) -> float:
    """Box-counting dimension: least-squares slope of log N(s) against
    log(1/s) over origin-anchored dyadic box sizes."""
    vox = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
    if vox.shape[0] < 2:
        raise ParameterError("fractal dimension needs at least two occupied voxels")
    scales = box_count_scales(dims)
    if len(scales) < 3:
        raise InsufficientScalesError(
            f"only {len(scales)} usable box scales for dims {tuple(dims)}; need at least 3"
        )
    counts = []
    for s in scales:
        boxes = np.unique(vox // s, axis=0)
        counts.append(len(boxes))
    x = np.log(1.0 / np.asarray(scales, dtype=np.float64))
    y = np.log(np.asarray(counts, dtype=np.float64))
    slope = float(np.polyfit(x, y, 1)[0])
    return slope


def pearson(a, b):
    """Pearson r with two-sided p via the t distribution (n-2 df)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ParameterError("paired vectors must have equal length")
    n = a.size
    if n < 3:
        raise ParameterError(f"correlation needs n >= 3, got {n}")
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float((da**2).sum()) * float((db**2).sum()))
    if denom == 0:
        raise ParameterError("zero variance input to correlation")
    r = float((da * db).sum() / denom)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(t_dist.sf(abs(t), n - 2))
    return r, p


def welch_t(a, b):
    """Unpaired Welch t-test (unequal variances), two-sided."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ParameterError("t-test needs at least two samples per group")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va == 0 and vb == 0:
        raise ParameterError("undefined t statistic: both groups have zero variance")
    se2 = va / na + vb / nb
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * float(t_dist.sf(abs(t), df))
    return t, p, df


def compare(a, b) -> ComparisonReport:
    """Percent difference 100*(a-b)/b per entry, Pearson r/p over the pair,
    and a Welch unpaired t-test treating a and b as two groups."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        pd = 100.0 * (a - b) / b
    r, rp = pearson(a, b)
    t, tp, df = welch_t(a, b)
    return ComparisonReport(percent_diff=pd, pearson_r=r, pearson_p=rp, t_stat=t, t_p=tp, t_df=df)


# --- extraction over the dynamic graph table ---------------------------------


def _trace_polyline(trace, spacing):
    pts = np.asarray(trace.points, dtype=np.float64) * np.asarray(spacing)
    return pts, np.asarray(trace.radii, dtype=np.float64)


def _concatenate_path(net, node_path, trace_path):
    """Physical polyline along consecutive traces of a named segment."""
    pts_out = None
    node_coord = {n.id: n.coord for n in net.nodes}
    tmap = net.trace_by_id()
    cur = node_path[0]
    chunks = []
    for tid in trace_path:
        t = tmap[tid]
        pts, _ = _trace_polyline(t, net.spacing)
        if t.start == cur:
            cur = t.end
        else:
            pts = pts[::-1]
            cur = t.start
        chunks.append(pts)
    pts_out = chunks[0]
    for c in chunks[1:]:
        pts_out = np.vstack([pts_out, c[1:]])
    return pts_out


def _longest_root_to_leaf(net, trace_ids, roots):
    """Longest physical root-to-leaf polyline within a subnetwork tree."""
    tmap = net.trace_by_id()
    adj = {}
    for tid in trace_ids:
        t = tmap[tid]
        adj.setdefault(t.start, []).append(tid)
        adj.setdefault(t.end, []).append(tid)
    best = None
    best_len = -1.0
    for root in roots:
        stack = [(root, (), 0.0, frozenset())]
        while stack:
            node, tpath, length, seen = stack.pop()
            extended = False
            for tid in sorted(adj.get(node, [])):
                if tid in seen:
                    continue
                t = tmap[tid]
                other = t.end if t.start == node else t.start
                stack.append((other, tpath + (tid,), length + net.trace_length_mm(t), seen | {tid}))
                extended = True
            if not extended and tpath and length > best_len:
                best_len = length
                best = (root, tpath)
    if best is None:
        return None
    root, tpath = best
    node_path = [root]
    cur = root
    for tid in tpath:
        t = tmap[tid]
        cur = t.end if t.start == cur else t.start
        node_path.append(cur)
    return _concatenate_path(net, node_path, tpath)


def _artery_row(name, net, trace_ids, tort_points) -> FeatureRow:
    tmap = net.trace_by_id()
    traces = [tmap[tid] for tid in trace_ids]
    polys = [_trace_polyline(t, net.spacing) for t in traces]
    all_radii = np.concatenate([r for _, r in polys]) if polys else np.array([])
    tort = None
    if tort_points is not None:
        try:
            tort = tortuosity(tort_points)
        except UndefinedTortuosityError:
            tort = None
    voxels = np.vstack([np.asarray(t.points) for t in traces]) if traces else np.empty((0, 3))
    fd = None
    if len(np.unique(voxels, axis=0)) >= 2:
        try:
            fd = fractal_dimension(voxels, _grid_dims_hint(net))
        except InsufficientScalesError:
            fd = None
    return FeatureRow(
        artery=name,
        total_length=total_length([p for p, _ in polys]),
        mean_radius=float(all_radii.mean()) if all_radii.size else None,
        total_volume=sum(segment_volume(p, r) for p, r in polys),
        branch_count=branch_count(trace_ids),
        mean_section_area=mean_section_area(all_radii) if all_radii.size else None,
        surface_area=sum(surface_area(p, r) for p, r in polys),
        tortuosity=tort,
        fractal_dimension=fd,
        present=True,
    )


def _grid_dims_hint(net):
    if getattr(net, "dims", None):
        return net.dims
    hi = 0
    for t in net.traces:
        for p in t.points:
            hi = max(hi, max(p))
    size = 1
    while size <= hi:
        size *= 2
    return (size, size, size)


def extract_features(table, net=None):
    """One FeatureRow per named segment and per subnetwork.

    Absent fault-tolerant arteries yield rows flagged absent with empty
    feature fields.
    """
    net = net if net is not None else table.net
    rows = []
    for name, trace_ids in table.segments.items():
        if name in table.presence and not table.presence[name]:
            rows.append(FeatureRow(artery=name, present=False))
            continue
        node_path = table.paths.get(name, ())
        tort_points = None
        if node_path and trace_ids:
            tort_points = _concatenate_path(net, node_path, trace_ids)
        rows.append(_artery_row(name, net, trace_ids, tort_points))
    for subnet, trace_ids in table.subnetworks.items():
        if not trace_ids:
            rows.append(FeatureRow(artery=subnet, present=False))
            continue
        roots = table.roots.get(subnet, ())
        tort_points = _longest_root_to_leaf(net, trace_ids, roots) if roots else None
        rows.append(_artery_row(subnet, net, trace_ids, tort_points))
    return rows


def rows_to_csv(rows, path):
    """Fixed-order CSV; absent rows keep empty feature fields."""
    with open(path, "w") as fh:
        fh.write("artery," + ",".join(FEATURE_COLUMNS) + ",present\n")
        for row in rows:
            vals = []
            for v in row.values():
                if v is None or not row.present:
                    vals.append("")
                elif isinstance(v, int):
                    vals.append(str(v))
                else:
                    vals.append(f"{v:.10g}")
            fh.write(f"{row.artery}," + ",".join(vals) + f",{int(row.present)}\n")


def rows_from_csv(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        expected = ["artery", *FEATURE_COLUMNS, "present"]
        if header != expected:
            raise ParameterError(f"unexpected feature CSV header {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(expected):
                continue
            present = parts[-1] == "1"

            def num(s, integer=False):
                if s == "":
                    return None
                return int(s) if integer else float(s)

            rows.append(
                FeatureRow(
                    artery=parts[0],
                    total_length=num(parts[1]),
                    mean_radius=num(parts[2]),
                    total_volume=num(parts[3]),
                    branch_count=num(parts[4], integer=True),
                    mean_section_area=num(parts[5]),
                    surface_area=num(parts[6]),
                    tortuosity=num(parts[7]),
                    fractal_dimension=num(parts[8]),
                    present=present,
                )
            )
    return rows
