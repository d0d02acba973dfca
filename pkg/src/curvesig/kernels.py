"""Hot kernels, compiled when available.

The Cython extension ``curvesig._kernels`` is preferred; the numpy module
``curvesig._fallback`` is used when the extension is missing or when the
environment variable ``CURVESIG_PURE_PYTHON`` is set to a non-empty value
other than ``0``.
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("CURVESIG_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _fallback
else:
    _impl = _fallback

trace_isolines = _impl.trace_isolines
circumcurvature = _impl.circumcurvature
three_point_curvature = _impl.three_point_curvature
gather_normalize = _impl.gather_normalize
normalize_windows = _impl.normalize_windows

__all__ = [
    "BACKEND",
    "trace_isolines",
    "circumcurvature",
    "three_point_curvature",
    "gather_normalize",
    "normalize_windows",
]
