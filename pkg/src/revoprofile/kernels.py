"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``REVOPROFILE_PURE_PYTHON=1``
to force the numpy/scipy fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("REVOPROFILE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python backend requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

windowed_curvature = _impl.windowed_curvature
mutual_nearest_pairs = _impl.mutual_nearest_pairs
polyline_distance = _impl.polyline_distance

__all__ = ["BACKEND", "windowed_curvature", "mutual_nearest_pairs", "polyline_distance"]
