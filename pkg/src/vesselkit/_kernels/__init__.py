"""Kernel selection: compiled extension when available, pure Python otherwise.

Set ``VESSELKIT_PURE=1`` to force the pure-Python kernels (used by the
benchmark and by environments where the extension failed to build).  Both
implementations produce identical results; only speed differs.
"""

import os

from . import fallback

if os.environ.get("VESSELKIT_PURE") == "1":
    _impl = fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = fallback

IS_COMPILED = bool(getattr(_impl, "IS_COMPILED", False))

icm_sweeps = _impl.icm_sweeps
edt_sq_index = _impl.edt_sq_index
thin = _impl.thin
