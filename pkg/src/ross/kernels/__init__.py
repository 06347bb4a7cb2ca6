"""Raster kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when importable; set ROSS_PURE_PYTHON=1
to force the numpy implementations. Both produce bit-identical results
(enforced by the parity tests), so the choice only affects speed.

Angles handed to polar_sample must be precomputed with numpy's arctan2 by
the caller: libm and numpy may disagree in the last ulp, so the transcendental
step stays on one implementation while the kernels do exact arithmetic only.
"""

from __future__ import annotations

import os

from . import _fallback

_force = os.environ.get("ROSS_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}

if not _force:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"
else:
    _impl = _fallback
    BACKEND = "python"

polar_sample = _impl.polar_sample
warp_nn = _impl.warp_nn
splat_priority = _impl.splat_priority
cfar_mask = _impl.cfar_mask

__all__ = ["BACKEND", "polar_sample", "warp_nn", "splat_priority", "cfar_mask"]
