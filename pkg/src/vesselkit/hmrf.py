"""Unsupervised two-class HMRF-EM segmentation with ICM MAP refinement.

The model couples per-class Gaussian intensity likelihoods with a spatial
smoothness prior: the penalty U(v, i) counts the masked 6-neighbors of voxel v
whose current label differs from i.  One EM iteration runs a block of
sequential ICM sweeps, checks the log-posterior for convergence or decrease,
then recomputes memberships (E-step) and class statistics (M-step).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import icm_sweeps
from .errors import ConsistencyError, EmptyClassError, ParameterError
from .volume import Volume3D

log = logging.getLogger(__name__)


def _masked_xfirst(arr, mask):
    """Masked values enumerated in x-fastest (linear index) order."""
    return np.asarray(arr).T[np.asarray(mask).T]

_SHIFTS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


@dataclass(frozen=True)
class LabelMap:
    """Per-voxel class labels (1..k inside the mask, 0 outside)."""

    labels: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        lab = np.asfortranarray(self.labels, dtype=np.uint8)
        msk = np.asfortranarray(self.mask, dtype=bool)
        if lab.shape != msk.shape:
            raise ConsistencyError(f"label dims {lab.shape} != mask dims {msk.shape}")
        if lab[msk].size and lab[msk].min() < 1:
            raise ConsistencyError("masked voxels must carry labels >= 1")
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "mask", msk)

    @property
    def dims(self):
        return self.labels.shape


@dataclass(frozen=True)
class EmParams:
    """Mixture and optimizer parameters; defaults follow the two-class setup."""

    mu: np.ndarray
    sigma: np.ndarray
    k: int = 2
    beta: float = 1.0
    eps_em: float = 1e-4
    n_icm: int = 10
    n_em_max: int = 4

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.k < 2:
            raise ParameterError(f"k must be >= 2, got {self.k}")
        if mu.shape != (self.k,) or sigma.shape != (self.k,):
            raise ParameterError(f"mu/sigma must have length k={self.k}")
        if not np.all(sigma > 0):
            raise ParameterError(f"all sigma must be > 0, got {sigma}")
        if self.beta < 0 or self.n_icm < 1 or self.n_em_max < 1 or not self.eps_em > 0:
            raise ParameterError("require beta >= 0, n_icm >= 1, n_em_max >= 1, eps_em > 0")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class Memberships:
    """Per-(masked voxel, class) probabilities in x-fastest mask order.

    `mask` records which voxels the rows describe; None means every voxel.
    """

    m: np.ndarray
    mask: np.ndarray | None = None
    underflow_count: int = 0

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.ndim != 2:
            raise ParameterError("memberships must be (n_masked, k)")
        if m.size and (m.min() < 0 or m.max() > 1 + 1e-12):
            raise ParameterError("membership entries must lie in [0, 1]")
        if m.size and np.abs(m.sum(axis=1) - 1.0).max() > 1e-9:
            raise ParameterError("membership rows must sum to 1 within 1e-9")
        object.__setattr__(self, "m", m)
        if self.mask is not None:
            msk = np.asfortranarray(self.mask, dtype=bool)
            if int(msk.sum()) != m.shape[0]:
                raise ConsistencyError("mask voxel count does not match membership rows")
            object.__setattr__(self, "mask", msk)


def gaussian_pdf(y, mu, sigma):
    """Gaussian density; `y` may be a scalar or array."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    y = np.asarray(y, dtype=np.float64)
    out = np.exp(-((y - mu) ** 2) / (2.0 * sigma**2)) / math.sqrt(2.0 * math.pi * sigma**2)
    return float(out) if out.ndim == 0 else out


def _neighbor_class_counts(labels, mask, cls):
    """Count of masked 6-neighbors labeled `cls`, per voxel."""
    hit = ((labels == cls) & mask).astype(np.int32)
    return _neighbor_sum(hit)


def _neighbor_sum(field):
    """Sum of the 6-neighborhood of an integer field, zero beyond the border."""
    out = np.zeros(field.shape, dtype=np.int32)
    for dx, dy, dz in _SHIFTS:
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        for axis, d in enumerate((dx, dy, dz)):
            if d == 1:
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
            elif d == -1:
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
        out[tuple(dst)] += field[tuple(src)]
    return out


def prior_penalty(labels: LabelMap, voxel, cls):
    """Number of masked 6-neighbors of `voxel` whose label differs from `cls`."""
    x, y, z = voxel
    if not labels.mask[x, y, z]:
        raise ParameterError(f"voxel {voxel} is outside the mask")
    dims = labels.dims
    n = 0
    for dx, dy, dz in _SHIFTS:
        xx, yy, zz = x + dx, y + dy, z + dz
        if 0 <= xx < dims[0] and 0 <= yy < dims[1] and 0 <= zz < dims[2] and labels.mask[xx, yy, zz]:
            if labels.labels[xx, yy, zz] != cls:
                n += 1
    return n


def _penalty_field(labels: LabelMap):
    """U(v, z_v) for every voxel: masked 6-neighbors with a different label."""
    masked_nb = _neighbor_sum(labels.mask.astype(np.int32))
    same = np.zeros(labels.dims, dtype=np.int32)
    for cls in np.unique(labels.labels[labels.mask]):
        cnt = _neighbor_class_counts(labels.labels, labels.mask, int(cls))
        same[labels.labels == cls] = cnt[labels.labels == cls]
    return masked_nb - same


def log_posterior(labels: LabelMap, vol: Volume3D, params: EmParams):
    """Sum over masked voxels of  ln N(y; mu_z, sigma_z) - beta * U(v, z)."""
    if labels.dims != vol.dims:
        raise ConsistencyError(f"label dims {labels.dims} != volume dims {vol.dims}")
    mask = labels.mask
    y = _masked_xfirst(vol.data.astype(np.float64), mask)
    z = _masked_xfirst(labels.labels, mask).astype(np.int64) - 1
    mu = params.mu[z]
    sigma = params.sigma[z]
    loglik = -0.5 * np.log(2.0 * np.pi * sigma**2) - (y - mu) ** 2 / (2.0 * sigma**2)
    u = _masked_xfirst(_penalty_field(labels), mask)
    return float(np.sum(loglik - params.beta * u))


def icm_update(labels: LabelMap, vol: Volume3D, params: EmParams) -> LabelMap:
    """Run `params.n_icm` sequential ICM sweeps; deterministic visitation order."""
    if labels.dims != vol.dims:
        raise ConsistencyError(f"label dims {labels.dims} != volume dims {vol.dims}")
    out = np.asfortranarray(labels.labels.copy())
    icm_sweeps(
        out.T,
        np.ascontiguousarray(vol.data.T, dtype=np.float64),
        np.ascontiguousarray(labels.mask.T, dtype=np.uint8),
        params.mu,
        params.sigma,
        float(params.beta),
        int(params.n_icm),
    )
    return LabelMap(labels=out, mask=labels.mask)


def e_step(labels: LabelMap, vol: Volume3D, params: EmParams) -> Memberships:
    """Class memberships  m(v,i) ∝ N(y; mu_i, sigma_i) · exp(-beta · U(v,i))."""
    mask = labels.mask
    y = _masked_xfirst(vol.data.astype(np.float64), mask)
    masked_nb = _masked_xfirst(_neighbor_sum(mask.astype(np.int32)), mask)
    m = np.empty((y.size, params.k), dtype=np.float64)
    for i in range(params.k):
        same = _masked_xfirst(_neighbor_class_counts(labels.labels, mask, i + 1), mask)
        u = masked_nb - same
        m[:, i] = gaussian_pdf(y, params.mu[i], params.sigma[i]) * np.exp(-params.beta * u)
    totals = m.sum(axis=1)
    dead = totals <= 0
    n_dead = int(dead.sum())
    if n_dead:
        log.warning("e_step: %d voxels underflowed to zero mass; assigning uniform memberships", n_dead)
        m[dead] = 1.0 / params.k
        totals[dead] = 1.0
    m /= totals[:, None]
    return Memberships(m=m, mask=mask, underflow_count=n_dead)


def m_step(memberships: Memberships, vol: Volume3D, params: EmParams, sigma_min=None) -> EmParams:
    """Reestimate class means and standard deviations from the memberships."""
    if memberships.mask is not None:
        y = _masked_xfirst(vol.data.astype(np.float64), memberships.mask)
    else:
        y = vol.data.astype(np.float64).ravel(order="F")
    if memberships.m.shape[0] != y.size:
        raise ConsistencyError(
            f"membership rows ({memberships.m.shape[0]}) do not match voxel count ({y.size})"
        )
    return _m_step_masked(memberships, y, vol, params, sigma_min)


def _m_step_masked(memberships: Memberships, y_masked, vol, params, sigma_min=None) -> EmParams:
    m = memberships.m
    if sigma_min is None:
        lo, hi = vol.intensity_range
        sigma_min = max(1e-6 * (hi - lo), 1e-12)
    mu = np.empty(params.k)
    sigma = np.empty(params.k)
    for i in range(params.k):
        w = m[:, i]
        total = float(w.sum())
        if total <= 0:
            raise EmptyClassError(f"class {i + 1} has zero total membership")
        mu[i] = float(np.sum(w * y_masked)) / total
        var = float(np.sum(w * (y_masked - mu[i]) ** 2)) / total
        sigma[i] = math.sqrt(var)
        if sigma[i] < sigma_min:
            log.warning("m_step: sigma[%d]=%.3g below floor %.3g; clamped", i, sigma[i], sigma_min)
            sigma[i] = sigma_min
    return replace(params, mu=mu, sigma=sigma)


def estimate_params(vol: Volume3D, init: LabelMap, base: EmParams | None = None) -> EmParams:
    """Initial per-class statistics from a hard labeling (e.g. the constant
    threshold prior)."""
    k = base.k if base is not None else 2
    lo, hi = vol.intensity_range
    sigma_min = max(1e-6 * (hi - lo), 1e-12)
    mu = np.empty(k)
    sigma = np.empty(k)
    data = vol.data.astype(np.float64)
    for i in range(k):
        sel = (init.labels == i + 1) & init.mask
        if not sel.any():
            raise EmptyClassError(f"class {i + 1} has no voxels in the initial labeling")
        vals = data[sel]
        mu[i] = float(vals.mean())
        sigma[i] = max(float(vals.std()), sigma_min)
    if base is None:
        return EmParams(mu=mu, sigma=sigma, k=k)
    return replace(base, mu=mu, sigma=sigma)


def em_segment(vol: Volume3D, init: LabelMap, params: EmParams):
    """Full EM loop; returns (labels, memberships, params, trace).

    The trace holds one (logp_before, logp_after) pair per iteration.  When an
    ICM block lowers the log-posterior the pre-ICM segmentation is returned
    (the decrease case); otherwise iteration continues until the relative
    change drops below eps_em or n_em_max iterations have updated parameters.
    """
    if init.dims != vol.dims:
        raise ConsistencyError(f"init dims {init.dims} != volume dims {vol.dims}")
    seg = init
    memberships = None
    trace = []
    y_masked = _masked_xfirst(vol.data.astype(np.float64), init.mask)
    i_em = 0
    while True:
        logp_before = log_posterior(seg, vol, params)
        candidate = icm_update(seg, vol, params)
        logp_after = log_posterior(candidate, vol, params)
        trace.append((logp_before, logp_after))
        if logp_after < logp_before:
            break  # keep pre-ICM `seg`
        seg = candidate
        rel_change = abs(logp_after - logp_before) / abs(logp_before) if logp_before != 0 else math.inf
        if rel_change <= params.eps_em:
            break
        memberships = e_step(seg, vol, params)
        params = _m_step_masked(memberships, y_masked, vol, params)
        i_em += 1
        if i_em >= params.n_em_max:
            break
    if memberships is None:
        memberships = e_step(seg, vol, params)
    return seg, memberships, params, trace
