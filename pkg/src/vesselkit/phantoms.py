"""Built-in phantom definitions: a Circle-of-Willis-like landmark layout with
distal trees, plus small toy configurations for tests.

Coordinates are expressed as fractions of the physical extent so one layout
serves any grid size; radii stay in mm.  Every landmark in the full layout has
skeleton degree 1 or 3, so the generating graph is recoverable node-for-node
from the rasterized volume.  Gentle multi-harmonic curvature on every artery
keeps the digitized centerline orientation-diverse, which is what holds the
voxel-path length error down at clinical voxel sizes.
"""

from __future__ import annotations

import numpy as np

from .simulate import FourierArtery


def _entry(order, a=(), b=()):
    cu = np.zeros(2 * order + 1)
    cv = np.zeros(2 * order + 1)
    for k, val in a:
        cv[k] = val  # a_k at index k (a0 at index 0)
    for k, val in b:
        cv[order + k] = val  # b_k at index order + k
    return FourierArtery(order=order, coeffs_u=cu, coeffs_v=cv)


def default_fbd(order: int = 4) -> dict:
    """Shape dictionary: chord residuals v(s) in chord-length units.

    Single-harmonic wiggles keep the tangent swing within the low-error
    digitization cone; larger shapes are available for synthetic variety."""
    return {
        "straight": _entry(order),
        "w03": _entry(order, b=[(1, 0.03)]),
        "w05s": _entry(order, b=[(1, 0.05)]),
        "w07": _entry(order, b=[(1, 0.07)]),
        "s10": _entry(order, b=[(1, 0.10)]),
        "arc25": _entry(order, a=[(0, 0.125), (1, -0.125)], b=[(2, 0.02)]),
        "wavy": _entry(order, b=[(1, 0.10), (2, 0.05)]),
    }


_COW_POINTS = {
    # canonical landmarks (fractions of extent); every chord runs along a face
    # or body diagonal of the grid, where digital path length is near exact,
    # and incident chords at every junction meet at 60-110 degrees so junction
    # blobs stay compact.  The ICA elbow at the Pcomm takeoff and the split M1
    # provide large built-in tortuosity without curvature extremes.
    "ICA_Root_L": (0.24, 0.71, 0.04),
    "ICA_Root_R": (0.76, 0.71, 0.04),
    "Pcomm-ICA_L": (0.24, 0.31, 0.44),
    "Pcomm-ICA_R": (0.76, 0.31, 0.44),
    "ICA-MCA-ACA_L": (0.24, 0.45, 0.58),
    "ICA-MCA-ACA_R": (0.76, 0.45, 0.58),
    "M1_elbow_L": (0.1641, 0.3709, 0.6634),
    "M1_elbow_R": (0.8387, 0.3717, 0.6626),
    "A1_elbow_L": (0.3122, 0.3817, 0.6513),
    "A1_elbow_R": (0.6859, 0.3846, 0.6531),
    "P1_elbow_L": (0.4372, 0.5067, 0.5036),
    "P1_elbow_R": (0.5632, 0.5043, 0.5068),
    "BA_elbow": (0.5731, 0.3722, 0.4984),
    "M1-M2_L": (0.0841, 0.4492, 0.7443),
    "M1-M2_R": (0.9186, 0.4508, 0.7414),
    "A1-A2_L": (0.3816, 0.4512, 0.7219),
    "A1-A2_R": (0.6169, 0.4532, 0.7241),
    "VA_Root_L": (0.3635, 0.1572, 0.5718),
    "VA_Root_R": (0.6368, 0.1581, 0.5709),
    "BA-VA": (0.5022, 0.3017, 0.4286),
    "PCA-BA": (0.5014, 0.4419, 0.5723),
    "P1-P2-Pcomm_L": (0.37, 0.44, 0.44),
    "P1-P2-Pcomm_R": (0.63, 0.44, 0.44),
    # distal tree points
    "PCA_L_j": (0.37, 0.56, 0.32),
    "PCA_L_t1": (0.2409, 0.6913, 0.3208),
    "PCA_L_t2": (0.45, 0.56, 0.24),
    "PCA_R_j": (0.63, 0.56, 0.32),
    "PCA_R_t1": (0.7594, 0.6921, 0.3217),
    "PCA_R_t2": (0.55, 0.56, 0.24),
    "MCA_L_j1": (0.0813, 0.3214, 0.8718),
    "MCA_L_j2": (0.19, 0.56, 0.74),
    "MCA_L_t1": (0.2117, 0.1909, 0.8722),
    "MCA_L_t2": (0.17, 0.32, 0.96),
    "MCA_L_t3": (0.19, 0.65, 0.83),
    "MCA_L_t4": (0.28, 0.56, 0.83),
    "MCA_R_j1": (0.9188, 0.3209, 0.8713),
    "MCA_R_j2": (0.81, 0.56, 0.74),
    "MCA_R_t1": (0.7885, 0.1913, 0.8717),
    "MCA_R_t2": (0.83, 0.32, 0.96),
    "MCA_R_t3": (0.81, 0.65, 0.83),
    "MCA_R_t4": (0.72, 0.56, 0.83),
    "ACA_L_t1": (0.38, 0.34, 0.83),
    "ACA_L_t2": (0.3812, 0.6014, 0.8709),
    "ACA_R_t1": (0.62, 0.34, 0.83),
    "ACA_R_t2": (0.6191, 0.6022, 0.8716),
}




_DIAG_CANDIDATES = None


def _diag_reference(chord):
    """A bending direction with substantial weight on every axis, as close to
    perpendicular to the chord as possible.

    Plane-confined tubes and axis-aligned bow apexes leave long constant-
    coordinate surface crests that thinning turns into spurious twigs; a
    diagonal bow makes the crest spiral instead.
    """
    global _DIAG_CANDIDATES
    if _DIAG_CANDIDATES is None:
        cands = []
        for sx in (1, -1):
            for sy in (1, -1):
                for sz in (1, -1):
                    for base in ((0.707, 0.5, 0.5), (0.5, 0.707, 0.5), (0.5, 0.5, 0.707)):
                        cands.append(np.array([sx * base[0], sy * base[1], sz * base[2]]))
        _DIAG_CANDIDATES = cands
    u = np.asarray(chord, dtype=np.float64)
    u = u / np.linalg.norm(u)
    best = min(_DIAG_CANDIDATES, key=lambda w: abs(float(w @ u)))
    return tuple(best)


def _cow_arteries():
    out = []

    def add(name, start, end, key, radius, report_as=None, subnetwork=None, root=None):
        chord = np.asarray(_COW_POINTS[end]) - np.asarray(_COW_POINTS[start])
        out.append(
            {
                "name": name,
                "start": start,
                "end": end,
                "fbd_key": key,
                "radius": radius,
                "report_as": report_as or name,
                "subnetwork": subnetwork,
                **({"root": root} if root else {}),
                "normal": _diag_reference(chord),
            }
        )

    add("VA_L", "VA_Root_L", "BA-VA", "straight", [1.7, 1.7])
    add("VA_R", "VA_Root_R", "BA-VA", "straight", [1.7, 1.7])
    add("BA_a", "BA-VA", "BA_elbow", "straight", [1.9, 1.9], report_as="BA")
    add("BA_b", "BA_elbow", "PCA-BA", "straight", [1.9, 1.9], report_as="BA")
    add("P1_L_a", "PCA-BA", "P1_elbow_L", "straight", [1.5, 1.5], report_as="P1_L")
    add("P1_L_b", "P1_elbow_L", "P1-P2-Pcomm_L", "straight", [1.5, 1.5], report_as="P1_L")
    add("P1_R_a", "PCA-BA", "P1_elbow_R", "straight", [1.5, 1.5], report_as="P1_R")
    add("P1_R_b", "P1_elbow_R", "P1-P2-Pcomm_R", "straight", [1.5, 1.5], report_as="P1_R")
    add("Pcomm_L", "Pcomm-ICA_L", "P1-P2-Pcomm_L", "w03", [1.45, 1.45])
    add("Pcomm_R", "Pcomm-ICA_R", "P1-P2-Pcomm_R", "w03", [1.45, 1.45])
    add("ICA_L_lower", "ICA_Root_L", "Pcomm-ICA_L", "w05s", [1.9, 1.8], report_as="ICA_L")
    add("ICA_L_upper", "Pcomm-ICA_L", "ICA-MCA-ACA_L", "w03", [1.8, 1.8], report_as="ICA_L")
    add("ICA_R_lower", "ICA_Root_R", "Pcomm-ICA_R", "w05s", [1.9, 1.8], report_as="ICA_R")
    add("ICA_R_upper", "Pcomm-ICA_R", "ICA-MCA-ACA_R", "w03", [1.8, 1.8], report_as="ICA_R")
    add("M1_L_a", "ICA-MCA-ACA_L", "M1_elbow_L", "straight", [1.8, 1.7], report_as="M1_L")
    add("M1_L_b", "M1_elbow_L", "M1-M2_L", "straight", [1.7, 1.6], report_as="M1_L")
    add("M1_R_a", "ICA-MCA-ACA_R", "M1_elbow_R", "straight", [1.8, 1.7], report_as="M1_R")
    add("M1_R_b", "M1_elbow_R", "M1-M2_R", "straight", [1.7, 1.6], report_as="M1_R")
    add("A1_L_a", "ICA-MCA-ACA_L", "A1_elbow_L", "straight", [1.6, 1.6], report_as="A1_L")
    add("A1_L_b", "A1_elbow_L", "A1-A2_L", "straight", [1.6, 1.6], report_as="A1_L")
    add("A1_R_a", "ICA-MCA-ACA_R", "A1_elbow_R", "straight", [1.6, 1.6], report_as="A1_R")
    add("A1_R_b", "A1_elbow_R", "A1-A2_R", "straight", [1.6, 1.6], report_as="A1_R")
    for side in ("L", "R"):
        add(f"MCA_{side}_b1", f"M1-M2_{side}", f"MCA_{side}_j1", "straight", [1.6, 1.5],
            subnetwork=f"MCA_{side}", root=f"M1-M2_{side}")
        add(f"MCA_{side}_b2", f"M1-M2_{side}", f"MCA_{side}_j2", "w03", [1.6, 1.5],
            subnetwork=f"MCA_{side}", root=f"M1-M2_{side}")
        add(f"MCA_{side}_b3", f"MCA_{side}_j1", f"MCA_{side}_t1", "straight", [1.45, 1.45],
            subnetwork=f"MCA_{side}", root=f"M1-M2_{side}")
        add(f"MCA_{side}_b4", f"MCA_{side}_j1", f"MCA_{side}_t2", "w03", [1.45, 1.45],
            subnetwork=f"MCA_{side}", root=f"M1-M2_{side}")
        add(f"MCA_{side}_b5", f"MCA_{side}_j2", f"MCA_{side}_t3", "w03", [1.45, 1.45],
            subnetwork=f"MCA_{side}", root=f"M1-M2_{side}")
        add(f"MCA_{side}_b6", f"MCA_{side}_j2", f"MCA_{side}_t4", "w03", [1.45, 1.45],
            subnetwork=f"MCA_{side}", root=f"M1-M2_{side}")
        add(f"ACA_{side}_b1", f"A1-A2_{side}", f"ACA_{side}_t1", "w03", [1.45, 1.45],
            subnetwork="ACA", root=f"A1-A2_{side}")
        add(f"ACA_{side}_b2", f"A1-A2_{side}", f"ACA_{side}_t2", "w05s", [1.45, 1.45],
            subnetwork="ACA", root=f"A1-A2_{side}")
        add(f"PCA_{side}_stem", f"P1-P2-Pcomm_{side}", f"PCA_{side}_j", "w03", [1.6, 1.5],
            subnetwork=f"PCA_{side}", root=f"P1-P2-Pcomm_{side}")
        add(f"PCA_{side}_b1", f"PCA_{side}_j", f"PCA_{side}_t1", "w05s", [1.45, 1.45],
            subnetwork=f"PCA_{side}", root=f"P1-P2-Pcomm_{side}")
        add(f"PCA_{side}_b2", f"PCA_{side}_j", f"PCA_{side}_t2", "w03", [1.45, 1.45],
            subnetwork=f"PCA_{side}", root=f"P1-P2-Pcomm_{side}")
    return out


def cow_phantom(dims=(192, 192, 192), spacing=0.5, seed=0, omit=(), intensity=None, jitter_deg=6.0):
    """Landmarks, dictionary and config for the Circle-of-Willis phantom.

    `omit` drops named arteries (e.g. ("Pcomm_L",) for the common anatomical
    variant); landmark points losing all incident arteries drop out too.
    """
    dims = tuple(int(d) for d in dims)
    sp = (float(spacing),) * 3 if np.isscalar(spacing) else tuple(spacing)
    extent = min(d * s for d, s in zip(dims, sp))
    landmarks = {name: [f * extent for f in frac] for name, frac in _COW_POINTS.items()}
    arteries = [a for a in _cow_arteries() if a["name"] not in omit and a["report_as"] not in omit]
    used = {a["start"] for a in arteries} | {a["end"] for a in arteries}
    landmarks = {k: v for k, v in landmarks.items() if k in used}
    config = {
        "grid": {"dims": list(dims), "spacing": list(sp)},
        "arteries": arteries,
        "intensity": intensity or {"mu_b": 100.0, "sigma_b": 6.0, "mu_v": 156.0, "sigma_v": 6.0},
        "jitter_deg": jitter_deg,
        "seed": seed,
    }
    return landmarks, default_fbd(), config


def two_artery_phantom(dims=(64, 64, 64), spacing=0.5, seed=0):
    """Minimal two-artery toy graph for unit tests."""
    dims = tuple(int(d) for d in dims)
    sp = (float(spacing),) * 3 if np.isscalar(spacing) else tuple(spacing)
    extent = min(d * s for d, s in zip(dims, sp))
    landmarks = {
        "A": [0.2 * extent, 0.5 * extent, 0.5 * extent],
        "B": [0.5 * extent, 0.5 * extent, 0.5 * extent],
        "C": [0.8 * extent, 0.3 * extent, 0.6 * extent],
    }
    config = {
        "grid": {"dims": list(dims), "spacing": list(sp)},
        "arteries": [
            {"name": "seg1", "start": "A", "end": "B", "fbd_key": "w05s", "radius": [2.0, 2.0], "normal": (0, 0, 1)},
            {"name": "seg2", "start": "B", "end": "C", "fbd_key": "s10", "radius": [1.8, 1.5], "normal": (0, 0, 1)},
        ],
        "intensity": {"mu_b": 100.0, "sigma_b": 8.0, "mu_v": 156.0, "sigma_v": 8.0},
        "jitter_deg": 8.0,
        "seed": seed,
    }
    return landmarks, default_fbd(), config
