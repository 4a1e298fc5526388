"""Pure-Python kernels, semantically identical to the compiled extension.

All kernels operate on C-contiguous [z, y, x] views (the transpose of the
package's Fortran-ordered (nx, ny, nz) arrays), so ascending memory order is
ascending x-fastest linear index.  The compiled module `_core` implements the
same functions with the same arithmetic; results must match bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

IS_COMPILED = False

_INF = 1 << 60
_NEG = -(1 << 60)

# 6-neighborhood offsets in (dz, dy, dx); order fixed for the thinning passes.
_DIRECTIONS = ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1))


def icm_sweeps(labels, img, mask, mu, sigma, beta, n_sweeps):
    """Sequential ICM label updates, `n_sweeps` full passes, in place.

    Visits masked voxels in ascending linear-index order and assigns the class
    maximizing  ln N(img; mu_i, sigma_i) - beta * U(i),  where U(i) counts
    masked 6-neighbors whose current label differs from i.  Ties go to the
    lower class index.  Uses the partially updated field within a sweep.
    """
    nz, ny, nx = labels.shape
    k = len(mu)
    lnconst = [-0.5 * math.log(2.0 * math.pi * float(sigma[i]) ** 2) for i in range(k)]
    inv2var = [1.0 / (2.0 * float(sigma[i]) ** 2) for i in range(k)]
    coords = np.argwhere(np.asarray(mask, dtype=bool))
    lab = labels
    msk = mask
    im = img
    for _ in range(n_sweeps):
        for z, y, x in coords:
            yv = float(im[z, y, x])
            n_nb = 0
            same = [0] * k
            for dz, dy, dx in _DIRECTIONS:
                zz, yy, xx = z + dz, y + dy, x + dx
                if 0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx and msk[zz, yy, xx]:
                    n_nb += 1
                    same[lab[zz, yy, xx] - 1] += 1
            best = 0
            best_score = -math.inf
            for i in range(k):
                diff = yv - float(mu[i])
                score = lnconst[i] - diff * diff * inv2var[i] - beta * (n_nb - same[i])
                if score > best_score:
                    best_score = score
                    best = i
            lab[z, y, x] = best + 1


def _envelope(f, n):
    """Lower envelope of parabolas f[j] + (y - j)^2 over integer y in [0, n).

    Returns (values, argmins); ties resolved to the smallest j.  All-integer
    arithmetic: the takeover point of parabola q over p (p < q) is the first
    integer y with f[q] + (y-q)^2 < f[p] + (y-p)^2.
    """
    v = [0]
    t = [_NEG]
    for q in range(1, n):
        fq = f[q]
        tq = 0
        while v:
            p = v[-1]
            c = fq + q * q - f[p] - p * p
            tq = c // (2 * (q - p)) + 1
            if tq <= t[-1]:
                v.pop()
                t.pop()
            else:
                break
        if not v:
            v.append(q)
            t.append(_NEG)
        elif tq < n:
            v.append(q)
            t.append(tq)
    out_d = [0] * n
    out_a = [0] * n
    m = 0
    last = len(v) - 1
    for y in range(n):
        while m < last and t[m + 1] <= y:
            m += 1
        p = v[m]
        out_d[y] = f[p] + (y - p) * (y - p)
        out_a[y] = p
    return out_d, out_a


def edt_sq_index(fg):
    """Exact squared Euclidean distance to the nearest background voxel.

    `fg` is a uint8 [z, y, x] array.  Returns (dist2 int64, nearest int64)
    where nearest is the x-fastest linear index of the closest background
    voxel, ties broken to the smallest linear index; background voxels map to
    themselves at distance 0.
    """
    nz, ny, nx = fg.shape
    d1 = np.full((nz, ny, nx), _INF, dtype=np.int64)
    bx = np.zeros((nz, ny, nx), dtype=np.int64)
    for z in range(nz):
        for y in range(ny):
            row = fg[z, y]
            dist = [_INF] * nx
            arg = [0] * nx
            last = -1
            for x in range(nx):
                if row[x] == 0:
                    last = x
                if last >= 0:
                    dist[x] = x - last
                    arg[x] = last
            nxt = -1
            for x in range(nx - 1, -1, -1):
                if row[x] == 0:
                    nxt = x
                if nxt >= 0 and nxt - x < dist[x]:
                    dist[x] = nxt - x
                    arg[x] = nxt
            for x in range(nx):
                if dist[x] < _INF:
                    d1[z, y, x] = dist[x] * dist[x]
                bx[z, y, x] = arg[x]

    d2 = np.empty_like(d1)
    by = np.zeros_like(bx)
    bx2 = np.zeros_like(bx)
    for z in range(nz):
        for x in range(nx):
            f = [int(d1[z, j, x]) for j in range(ny)]
            vals, args = _envelope(f, ny)
            for y in range(ny):
                j = args[y]
                d2[z, y, x] = vals[y]
                by[z, y, x] = j
                bx2[z, y, x] = bx[z, j, x]

    dist2 = np.empty_like(d1)
    nearest = np.empty((nz, ny, nx), dtype=np.int64)
    for y in range(ny):
        for x in range(nx):
            f = [int(d2[kk, y, x]) for kk in range(nz)]
            vals, args = _envelope(f, nz)
            for z in range(nz):
                kk = args[z]
                dist2[z, y, x] = vals[z]
                nearest[z, y, x] = bx2[kk, y, x] + nx * (by[kk, y, x] + ny * kk)
    return dist2, nearest


def _local_cube(fg, z, y, x):
    """27-bit foreground snapshot of the 3x3x3 neighborhood; OOB = background."""
    nz, ny, nx = fg.shape
    cube = [0] * 27
    idx = 0
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                zz, yy, xx = z + dz, y + dy, x + dx
                if 0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx and fg[zz, yy, xx]:
                    cube[idx] = 1
                idx += 1
    return cube


def _cube_offset(dz, dy, dx):
    return (dz + 1) * 9 + (dy + 1) * 3 + (dx + 1)


_N26 = [_cube_offset(dz, dy, dx) for dz in (-1, 0, 1) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dz, dy, dx) != (0, 0, 0)]
_N18 = [
    _cube_offset(dz, dy, dx)
    for dz in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dx in (-1, 0, 1)
    if 0 < abs(dz) + abs(dy) + abs(dx) <= 2
]
_N6 = [_cube_offset(*d) for d in _DIRECTIONS]


def _build_adjacency():
    def coords(i):
        return i // 9 - 1, (i // 3) % 3 - 1, i % 3 - 1

    adj26 = {i: [] for i in _N26}
    for a in _N26:
        za, ya, xa = coords(a)
        for b in _N26:
            if a == b:
                continue
            zb, yb, xb = coords(b)
            if max(abs(za - zb), abs(ya - yb), abs(xa - xb)) == 1:
                adj26[a].append(b)
    # face adjacency restricted to the 18-neighborhood
    adj6_18 = {i: [] for i in _N18}
    for a in _N18:
        za, ya, xa = coords(a)
        for b in _N18:
            if a == b:
                continue
            zb, yb, xb = coords(b)
            if abs(za - zb) + abs(ya - yb) + abs(xa - xb) == 1:
                adj6_18[a].append(b)
    return adj26, adj6_18


_ADJ26, _ADJ6_18 = _build_adjacency()


def _is_simple(cube):
    """Simple-point test via the 26/6 connectivity pair.

    Deleting the center preserves topology iff the foreground 26-neighbors form
    exactly one 26-component, and the background cells of the 18-neighborhood
    form exactly one face-connected component touching a face neighbor.
    """
    fg_cells = [i for i in _N26 if cube[i]]
    if not fg_cells:
        return False
    seen = {fg_cells[0]}
    stack = [fg_cells[0]]
    while stack:
        a = stack.pop()
        for b in _ADJ26[a]:
            if cube[b] and b not in seen:
                seen.add(b)
                stack.append(b)
    if len(seen) != len(fg_cells):
        return False

    bg_faces = [i for i in _N6 if not cube[i]]
    if not bg_faces:
        return False
    seen_b = {bg_faces[0]}
    stack = [bg_faces[0]]
    while stack:
        a = stack.pop()
        for b in _ADJ6_18[a]:
            if not cube[b] and b not in seen_b:
                seen_b.add(b)
                stack.append(b)
    return all(f in seen_b for f in bg_faces)


def _count26(fg, z, y, x):
    nz, ny, nx = fg.shape
    n = 0
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dz == 0 and dy == 0 and dx == 0:
                    continue
                zz, yy, xx = z + dz, y + dy, x + dx
                if 0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx and fg[zz, yy, xx]:
                    n += 1
    return n


def thin(fg):
    """Topology-preserving medial-axis thinning, in place on a uint8 [z,y,x] array.

    Repeats 6 directional subiterations until stable.  A voxel is deleted when
    it is a border point in the pass direction, not a curve endpoint (more
    than one foreground 26-neighbor), and simple; deletions within a pass are
    sequential in ascending linear-index order with re-checking, which keeps
    the result deterministic and the topology intact.
    """
    pad = np.pad(np.asarray(fg, dtype=np.uint8), 1)
    changed = True
    while changed:
        changed = False
        for dz, dy, dx in _DIRECTIONS:
            inner = pad[1:-1, 1:-1, 1:-1]
            border = (inner == 1) & (pad[1 + dz : pad.shape[0] - 1 + dz, 1 + dy : pad.shape[1] - 1 + dy, 1 + dx : pad.shape[2] - 1 + dx] == 0)
            cand = np.argwhere(border)
            keep = []
            for z, y, x in cand:
                c = _count26(inner, z, y, x)
                if c > 1 and _is_simple(_local_cube(inner, z, y, x)):
                    keep.append((z, y, x))
            for z, y, x in keep:
                if _count26(inner, z, y, x) > 1 and _is_simple(_local_cube(inner, z, y, x)):
                    inner[z, y, x] = 0
                    changed = True
    np.copyto(fg, pad[1:-1, 1:-1, 1:-1])
