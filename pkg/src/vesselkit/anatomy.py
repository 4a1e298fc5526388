"""Canonical landmark labels and the standardized artery classification map.

Sixteen critical nodes span the proximal circulation; named proximal segments
connect landmark pairs, fault-tolerant segments (communicating arteries and
their variants) may be anatomically absent, and distal trees beyond the three
gateway landmarks per side are reported as subnetworks.  The defaults are
embedded here and may be overridden by a classification config JSON of the
same shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

CANONICAL_LABELS = (
    "M1-M2_L",
    "M1-M2_R",
    "A1-A2_L",
    "A1-A2_R",
    "ICA-MCA-ACA_L",
    "ICA-MCA-ACA_R",
    "Pcomm-ICA_L",
    "Pcomm-ICA_R",
    "ICA_Root_L",
    "ICA_Root_R",
    "P1-P2-Pcomm_L",
    "P1-P2-Pcomm_R",
    "PCA-BA",
    "BA-VA",
    "VA_Root_L",
    "VA_Root_R",
)


@dataclass(frozen=True)
class SegmentDef:
    """A named proximal segment between two landmark labels.

    `via` lists landmarks the connecting path is allowed to pass through;
    fault-tolerant segments whose path would cross any other assigned landmark
    are treated as anatomically absent rather than misrouted.
    """

    name: str
    start: str
    end: str
    fault_tolerant: bool = False
    via: tuple = ()


@dataclass(frozen=True)
class ClassificationConfig:
    labels: tuple = CANONICAL_LABELS
    segments: tuple = ()
    gateways: tuple = ()  # (landmark label, subnetwork name) in claim-priority order

    def mandatory_labels(self):
        """Labels that must be assigned: all except those used only by
        fault-tolerant segments."""
        optional = set(self.labels)
        for seg in self.segments:
            if not seg.fault_tolerant:
                optional.discard(seg.start)
                optional.discard(seg.end)
        for label, _ in self.gateways:
            optional.discard(label)
        return tuple(l for l in self.labels if l not in optional)

    def fault_tolerant_segments(self):
        return tuple(s.name for s in self.segments if s.fault_tolerant)


DEFAULT_SEGMENTS = (
    SegmentDef("ICA_L", "ICA_Root_L", "ICA-MCA-ACA_L", via=("Pcomm-ICA_L",)),
    SegmentDef("ICA_R", "ICA_Root_R", "ICA-MCA-ACA_R", via=("Pcomm-ICA_R",)),
    SegmentDef("M1_L", "ICA-MCA-ACA_L", "M1-M2_L"),
    SegmentDef("M1_R", "ICA-MCA-ACA_R", "M1-M2_R"),
    SegmentDef("A1_L", "ICA-MCA-ACA_L", "A1-A2_L", fault_tolerant=True),
    SegmentDef("A1_R", "ICA-MCA-ACA_R", "A1-A2_R", fault_tolerant=True),
    SegmentDef("Pcomm_L", "Pcomm-ICA_L", "P1-P2-Pcomm_L", fault_tolerant=True),
    SegmentDef("Pcomm_R", "Pcomm-ICA_R", "P1-P2-Pcomm_R", fault_tolerant=True),
    SegmentDef("P1_L", "PCA-BA", "P1-P2-Pcomm_L", fault_tolerant=True),
    SegmentDef("P1_R", "PCA-BA", "P1-P2-Pcomm_R", fault_tolerant=True),
    SegmentDef("BA", "BA-VA", "PCA-BA"),
    SegmentDef("VA_L", "VA_Root_L", "BA-VA"),
    SegmentDef("VA_R", "VA_Root_R", "BA-VA"),
)

DEFAULT_GATEWAYS = (
    ("M1-M2_L", "MCA_L"),
    ("M1-M2_R", "MCA_R"),
    ("A1-A2_L", "ACA"),
    ("A1-A2_R", "ACA"),
    ("P1-P2-Pcomm_L", "PCA_L"),
    ("P1-P2-Pcomm_R", "PCA_R"),
)

DEFAULT_CONFIG = ClassificationConfig(segments=DEFAULT_SEGMENTS, gateways=DEFAULT_GATEWAYS)

SUBNETWORK_NAMES = ("MCA_L", "MCA_R", "ACA", "PCA_L", "PCA_R", "Proximal", "Distal")


def load_classification_config(path) -> ClassificationConfig:
    """Read a classification config JSON; missing keys fall back to defaults."""
    with open(path) as fh:
        raw = json.load(fh)
    labels = tuple(raw.get("labels", CANONICAL_LABELS))
    segments = tuple(
        SegmentDef(
            name=s["name"],
            start=s["start"],
            end=s["end"],
            fault_tolerant=bool(s.get("fault_tolerant", False)),
            via=tuple(s.get("via", ())),
        )
        for s in raw.get("segments", [])
    ) or DEFAULT_SEGMENTS
    gateways = tuple((g["label"], g["subnetwork"]) for g in raw.get("gateways", [])) or DEFAULT_GATEWAYS
    return ClassificationConfig(labels=labels, segments=segments, gateways=gateways)
