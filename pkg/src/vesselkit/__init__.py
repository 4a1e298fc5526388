"""Toolkit for extracting, classifying and quantifying intracranial artery
networks from 3D angiography volumes, with a synthetic-phantom validation
framework.

Subpackages follow the processing pipeline: :mod:`vesselkit.volume` (I/O and
resampling), :mod:`vesselkit.hmrf` (unsupervised segmentation),
:mod:`vesselkit.skeleton` (distance transform, thinning, radii),
:mod:`vesselkit.graph` (vessel-fused network and landmark classification),
:mod:`vesselkit.features` (per-artery morphometry and statistics),
:mod:`vesselkit.simulate` (ground-truth phantom generation), and
:mod:`vesselkit.cli` / :mod:`vesselkit.server` (orchestration).
"""

from ._kernels import IS_COMPILED

__version__ = "0.1.0"

__all__ = ["IS_COMPILED", "__version__"]
