# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must match `fallback.py` bit for bit.

All arrays are C-contiguous [z, y, x] views of the package's Fortran-ordered
(nx, ny, nz) volumes, so ascending memory order is ascending x-fastest linear
index.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log
from libc.stdlib cimport free, malloc

IS_COMPILED = True

cdef long long INF = <long long>1 << 60
cdef long long NEG = -(<long long>1 << 60)

cdef int DZ[6]
cdef int DY[6]
cdef int DX[6]
DZ[0] = -1; DY[0] = 0; DX[0] = 0
DZ[1] = 1;  DY[1] = 0; DX[1] = 0
DZ[2] = 0;  DY[2] = -1; DX[2] = 0
DZ[3] = 0;  DY[3] = 1;  DX[3] = 0
DZ[4] = 0;  DY[4] = 0;  DX[4] = -1
DZ[5] = 0;  DY[5] = 0;  DX[5] = 1


def icm_sweeps(unsigned char[:, :, ::1] labels,
               double[:, :, ::1] img,
               unsigned char[:, :, ::1] mask,
               double[::1] mu,
               double[::1] sigma,
               double beta,
               int n_sweeps):
    """Sequential ICM sweeps in ascending linear-index order, in place."""
    cdef Py_ssize_t nz = labels.shape[0], ny = labels.shape[1], nx = labels.shape[2]
    cdef int k = <int>mu.shape[0]
    if k > 32:
        raise ValueError("at most 32 classes supported")
    cdef double lnconst[32]
    cdef double inv2var[32]
    cdef int same[32]
    cdef int i, d, n_nb, best
    cdef Py_ssize_t z, y, x, zz, yy, xx
    cdef int sweep
    cdef double yv, diff, score, best_score
    for i in range(k):
        lnconst[i] = -0.5 * log(2.0 * np.pi * sigma[i] * sigma[i])
        inv2var[i] = 1.0 / (2.0 * sigma[i] * sigma[i])
    for sweep in range(n_sweeps):
        for z in range(nz):
            for y in range(ny):
                for x in range(nx):
                    if mask[z, y, x] == 0:
                        continue
                    yv = img[z, y, x]
                    n_nb = 0
                    for i in range(k):
                        same[i] = 0
                    for d in range(6):
                        zz = z + DZ[d]; yy = y + DY[d]; xx = x + DX[d]
                        if 0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx and mask[zz, yy, xx]:
                            n_nb += 1
                            same[labels[zz, yy, xx] - 1] += 1
                    best = 0
                    best_score = -INFINITY
                    for i in range(k):
                        diff = yv - mu[i]
                        score = lnconst[i] - diff * diff * inv2var[i] - beta * (n_nb - same[i])
                        if score > best_score:
                            best_score = score
                            best = i
                    labels[z, y, x] = <unsigned char>(best + 1)


cdef inline long long floor_div(long long a, long long b):
    cdef long long q = a / b
    if a % b != 0 and (a < 0) != (b < 0):
        q -= 1
    return q


cdef void envelope(long long* f, Py_ssize_t n, long long* out_d, long long* out_a,
                   long long* v, long long* t):
    """Lower envelope of f[j] + (y-j)^2; ties resolved to the smallest j."""
    cdef Py_ssize_t top = 0, q, y, m
    cdef long long c, tq, p, fq
    v[0] = 0
    t[0] = NEG
    for q in range(1, n):
        fq = f[q]
        tq = 0
        while top >= 0:
            p = v[top]
            c = fq + <long long>q * q - f[p] - p * p
            tq = floor_div(c, 2 * (q - p)) + 1
            if tq <= t[top]:
                top -= 1
            else:
                break
        if top < 0:
            top = 0
            v[0] = q
            t[0] = NEG
        elif tq < n:
            top += 1
            v[top] = q
            t[top] = tq
    m = 0
    for y in range(n):
        while m < top and t[m + 1] <= y:
            m += 1
        p = v[m]
        out_d[y] = f[p] + (y - p) * (y - p)
        out_a[y] = p


def edt_sq_index(unsigned char[:, :, ::1] fg):
    """Exact squared EDT plus nearest-background linear index (smallest-index ties)."""
    cdef Py_ssize_t nz = fg.shape[0], ny = fg.shape[1], nx = fg.shape[2]
    d1_np = np.full((nz, ny, nx), INF, dtype=np.int64)
    bx_np = np.zeros((nz, ny, nx), dtype=np.int64)
    cdef long long[:, :, ::1] d1 = d1_np
    cdef long long[:, :, ::1] bx = bx_np
    cdef Py_ssize_t z, y, x, j, kk
    cdef long long last, nxt, dd

    for z in range(nz):
        for y in range(ny):
            last = -1
            for x in range(nx):
                if fg[z, y, x] == 0:
                    last = x
                if last >= 0:
                    dd = x - last
                    d1[z, y, x] = dd * dd
                    bx[z, y, x] = last
            nxt = -1
            for x in range(nx - 1, -1, -1):
                if fg[z, y, x] == 0:
                    nxt = x
                if nxt >= 0:
                    dd = nxt - x
                    if dd * dd < d1[z, y, x]:
                        d1[z, y, x] = dd * dd
                        bx[z, y, x] = nxt

    d2_np = np.empty((nz, ny, nx), dtype=np.int64)
    by_np = np.zeros((nz, ny, nx), dtype=np.int64)
    bx2_np = np.zeros((nz, ny, nx), dtype=np.int64)
    cdef long long[:, :, ::1] d2 = d2_np
    cdef long long[:, :, ::1] by = by_np
    cdef long long[:, :, ::1] bx2 = bx2_np
    cdef Py_ssize_t nmax = max(ny, nz)
    cdef long long* f = <long long*>malloc(nmax * sizeof(long long))
    cdef long long* od = <long long*>malloc(nmax * sizeof(long long))
    cdef long long* oa = <long long*>malloc(nmax * sizeof(long long))
    cdef long long* sv = <long long*>malloc((nmax + 1) * sizeof(long long))
    cdef long long* st = <long long*>malloc((nmax + 1) * sizeof(long long))
    if f == NULL or od == NULL or oa == NULL or sv == NULL or st == NULL:
        free(f); free(od); free(oa); free(sv); free(st)
        raise MemoryError()

    try:
        for z in range(nz):
            for x in range(nx):
                for j in range(ny):
                    f[j] = d1[z, j, x]
                envelope(f, ny, od, oa, sv, st)
                for y in range(ny):
                    j = oa[y]
                    d2[z, y, x] = od[y]
                    by[z, y, x] = j
                    bx2[z, y, x] = bx[z, j, x]

        dist2_np = np.empty((nz, ny, nx), dtype=np.int64)
        nearest_np = np.empty((nz, ny, nx), dtype=np.int64)
        _edt_z_pass(d2, bx2, by, dist2_np, nearest_np, f, od, oa, sv, st)
    finally:
        free(f); free(od); free(oa); free(sv); free(st)
    return dist2_np, nearest_np


cdef void _edt_z_pass(long long[:, :, ::1] d2, long long[:, :, ::1] bx2,
                      long long[:, :, ::1] by, object dist2_np, object nearest_np,
                      long long* f, long long* od, long long* oa,
                      long long* sv, long long* st):
    cdef long long[:, :, ::1] dist2 = dist2_np
    cdef long long[:, :, ::1] nearest = nearest_np
    cdef Py_ssize_t nz = d2.shape[0], ny = d2.shape[1], nx = d2.shape[2]
    cdef Py_ssize_t y, x, z, kk
    for y in range(ny):
        for x in range(nx):
            for kk in range(nz):
                f[kk] = d2[kk, y, x]
            envelope(f, nz, od, oa, sv, st)
            for z in range(nz):
                kk = oa[z]
                dist2[z, y, x] = od[z]
                nearest[z, y, x] = bx2[kk, y, x] + nx * (by[kk, y, x] + ny * kk)


# --- thinning ---------------------------------------------------------------

cdef int ADJ26[26][26]
cdef int ADJ26_LEN[26]
cdef int ADJ6[18][18]
cdef int ADJ6_LEN[18]
cdef int N26_IDX[26]
cdef int N18_IDX[18]
cdef int N6_IDX[6]
cdef int CUBE_IN_N26[27]
cdef int CUBE_IN_N18[27]


cdef void _init_tables():
    cdef int i, j, a, b, n26 = 0, n18 = 0, n6 = 0
    cdef int za, ya, xa, zb, yb, xb, man
    for i in range(27):
        CUBE_IN_N26[i] = -1
        CUBE_IN_N18[i] = -1
    for i in range(27):
        if i == 13:  # center
            continue
        N26_IDX[n26] = i
        CUBE_IN_N26[i] = n26
        n26 += 1
    for i in range(27):
        if i == 13:
            continue
        za = i // 9 - 1; ya = (i // 3) % 3 - 1; xa = i % 3 - 1
        man = (za if za >= 0 else -za) + (ya if ya >= 0 else -ya) + (xa if xa >= 0 else -xa)
        if man <= 2:
            N18_IDX[n18] = i
            CUBE_IN_N18[i] = n18
            n18 += 1
        if man == 1:
            N6_IDX[n6] = i
            n6 += 1
    for i in range(26):
        ADJ26_LEN[i] = 0
        a = N26_IDX[i]
        za = a // 9 - 1; ya = (a // 3) % 3 - 1; xa = a % 3 - 1
        for j in range(26):
            if i == j:
                continue
            b = N26_IDX[j]
            zb = b // 9 - 1; yb = (b // 3) % 3 - 1; xb = b % 3 - 1
            if max(abs(za - zb), max(abs(ya - yb), abs(xa - xb))) == 1:
                ADJ26[i][ADJ26_LEN[i]] = j
                ADJ26_LEN[i] += 1
    for i in range(18):
        ADJ6_LEN[i] = 0
        a = N18_IDX[i]
        za = a // 9 - 1; ya = (a // 3) % 3 - 1; xa = a % 3 - 1
        for j in range(18):
            if i == j:
                continue
            b = N18_IDX[j]
            zb = b // 9 - 1; yb = (b // 3) % 3 - 1; xb = b % 3 - 1
            if abs(za - zb) + abs(ya - yb) + abs(xa - xb) == 1:
                ADJ6[i][ADJ6_LEN[i]] = j
                ADJ6_LEN[i] += 1


_init_tables()


cdef inline void _fill_cube(unsigned char[:, :, ::1] fg, Py_ssize_t z, Py_ssize_t y,
                            Py_ssize_t x, int* cube):
    cdef Py_ssize_t nz = fg.shape[0], ny = fg.shape[1], nx = fg.shape[2]
    cdef int dz, dy, dx, idx = 0
    cdef Py_ssize_t zz, yy, xx
    for dz in range(-1, 2):
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                zz = z + dz; yy = y + dy; xx = x + dx
                if 0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx and fg[zz, yy, xx] != 0:
                    cube[idx] = 1
                else:
                    cube[idx] = 0
                idx += 1


cdef int _count26_cube(int* cube):
    cdef int i, n = 0
    for i in range(27):
        if i != 13 and cube[i]:
            n += 1
    return n


cdef bint _is_simple_cube(int* cube):
    cdef int stack[26]
    cdef char seen[26]
    cdef int i, a, b, top, n_fg = 0, first = -1, reached = 0
    for i in range(26):
        seen[i] = 0
        if cube[N26_IDX[i]]:
            n_fg += 1
            if first < 0:
                first = i
    if n_fg == 0:
        return False
    top = 0
    stack[0] = first
    seen[first] = 1
    reached = 1
    while top >= 0:
        a = stack[top]
        top -= 1
        for i in range(ADJ26_LEN[a]):
            b = ADJ26[a][i]
            if cube[N26_IDX[b]] and not seen[b]:
                seen[b] = 1
                reached += 1
                top += 1
                stack[top] = b
    if reached != n_fg:
        return False

    cdef char seen18[18]
    cdef int stack18[18]
    cdef int first_bg = -1
    for i in range(18):
        seen18[i] = 0
    for i in range(6):
        if cube[N6_IDX[i]] == 0:
            first_bg = CUBE_IN_N18[N6_IDX[i]]
            break
    if first_bg < 0:
        return False
    top = 0
    stack18[0] = first_bg
    seen18[first_bg] = 1
    while top >= 0:
        a = stack18[top]
        top -= 1
        for i in range(ADJ6_LEN[a]):
            b = ADJ6[a][i]
            if cube[N18_IDX[b]] == 0 and not seen18[b]:
                seen18[b] = 1
                top += 1
                stack18[top] = b
    for i in range(6):
        if cube[N6_IDX[i]] == 0 and not seen18[CUBE_IN_N18[N6_IDX[i]]]:
            return False
    return True


def thin(unsigned char[:, :, ::1] fg):
    """Iterative 6-subiteration thinning with sequential re-checked deletion."""
    cdef Py_ssize_t nz = fg.shape[0], ny = fg.shape[1], nx = fg.shape[2]
    cdef int cube[27]
    cdef Py_ssize_t z, y, x, zz, yy, xx, n_cand, ci, lin
    cdef int d
    cdef bint changed = True
    cand_np = np.empty(nz * ny * nx, dtype=np.int64)
    cdef long long[::1] cand = cand_np

    while changed:
        changed = False
        for d in range(6):
            n_cand = 0
            for z in range(nz):
                for y in range(ny):
                    for x in range(nx):
                        if fg[z, y, x] == 0:
                            continue
                        zz = z + DZ[d]; yy = y + DY[d]; xx = x + DX[d]
                        if 0 <= zz < nz and 0 <= yy < ny and 0 <= xx < nx and fg[zz, yy, xx] != 0:
                            continue
                        _fill_cube(fg, z, y, x, cube)
                        if _count26_cube(cube) > 1 and _is_simple_cube(cube):
                            cand[n_cand] = (z * ny + y) * nx + x
                            n_cand += 1
            for ci in range(n_cand):
                lin = cand[ci]
                x = lin % nx
                y = (lin // nx) % ny
                z = lin // (nx * ny)
                _fill_cube(fg, z, y, x, cube)
                if _count26_cube(cube) > 1 and _is_simple_cube(cube):
                    fg[z, y, x] = 0
                    changed = True
