"""Backend selection for the hot kernels.

The compiled extension ``capdual._ckernels`` is used when it was built;
otherwise the numpy implementations in ``capdual._pykernels`` are used.
Set ``CAPDUAL_KERNELS=python`` to force the fallback.
"""
import os

from . import _pykernels

python = _pykernels

try:
    if os.environ.get("CAPDUAL_KERNELS", "").lower() == "python":
        raise ImportError("compiled kernels disabled by CAPDUAL_KERNELS")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

segments_min_distance = active.segments_min_distance
segment_weighted_integral = active.segment_weighted_integral
dijkstra = active.dijkstra

__all__ = [
    "BACKEND",
    "active",
    "compiled",
    "python",
    "segments_min_distance",
    "segment_weighted_integral",
    "dijkstra",
]
