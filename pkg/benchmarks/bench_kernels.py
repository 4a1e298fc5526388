"""Benchmark the compiled extension against the pure-Python fallback kernels.

Usage:  python benchmarks/bench_kernels.py [--size 48]

The two implementations are semantically identical (the suite asserts equal
outputs); this script reports the speed ratio on the three hot loops: ICM
sweeps, exact EDT with feature map, and topology-preserving thinning.
"""

import argparse
import time

import numpy as np

from vesselkit._kernels import _impl, fallback

try:
    from vesselkit._kernels import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def make_problem(n, rng):
    truth = rng.random((n, n, n)) < 0.15
    img = np.where(truth, 150.0, 100.0) + rng.normal(0, 8, truth.shape)
    mask = np.ones_like(truth, np.uint8)
    labels = np.where(rng.random(truth.shape) < 0.5, 1, 2).astype(np.uint8)
    return img, mask, labels, truth


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=48)
    ap.add_argument("--sweeps", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled extension not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    n = args.size
    img, mask, labels, truth = make_problem(n, rng)
    mu = np.array([100.0, 150.0])
    sigma = np.array([8.0, 8.0])

    print(f"volume {n}^3 = {n**3} voxels")
    rows = []

    la, lb = labels.copy(), labels.copy()
    t_c, _ = timeit(lambda: _core.icm_sweeps(la.copy(), img, mask, mu, sigma, 1.0, args.sweeps))
    t_p, _ = timeit(lambda: fallback.icm_sweeps(lb.copy(), img, mask, mu, sigma, 1.0, args.sweeps), repeat=1)
    _core.icm_sweeps(la, img, mask, mu, sigma, 1.0, args.sweeps)
    fallback.icm_sweeps(lb, img, mask, mu, sigma, 1.0, args.sweeps)
    assert np.array_equal(la, lb)
    rows.append((f"icm_sweeps x{args.sweeps}", t_c, t_p))

    fg = truth.astype(np.uint8)
    t_c, (d_c, n_c) = timeit(lambda: _core.edt_sq_index(fg))
    t_p, (d_p, n_p) = timeit(lambda: fallback.edt_sq_index(fg), repeat=1)
    assert np.array_equal(d_c, d_p) and np.array_equal(n_c, n_p)
    rows.append(("edt_sq_index", t_c, t_p))

    fa, fb = fg.copy(), fg.copy()
    t_c, _ = timeit(lambda: _core.thin(fa.copy()))
    t_p, _ = timeit(lambda: fallback.thin(fb.copy()), repeat=1)
    _core.thin(fa)
    fallback.thin(fb)
    assert np.array_equal(fa, fb)
    rows.append(("thin", t_c, t_p))

    print(f"{'kernel':<18s} {'compiled':>10s} {'pure':>10s} {'speedup':>9s}")
    for name, t_c, t_p in rows:
        print(f"{name:<18s} {t_c*1e3:9.1f}ms {t_p*1e3:9.1f}ms {t_p/t_c:8.1f}x")


if __name__ == "__main__":
    main()
