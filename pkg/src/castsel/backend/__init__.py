"""Kernel backend selection.

The hot numeric scans exist twice: jitted (kernels_nb) and pure numpy
(kernels_np). The active backend is chosen once, at first import, from the
environment variable CASTSEL_BACKEND:

    auto   (default) jitted if numba imports, else numpy
    numba  require the jitted backend, fail if numba is unavailable
    numpy  force the fallback

Set the variable before importing the package; changing it later has no
effect. `benchmarks/bench_kernels.py` times both implementations directly.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import kernels_np

_requested = os.environ.get("CASTSEL_BACKEND", "auto").strip().lower()

if _requested in ("auto", "numba"):
    try:
        from . import kernels_nb as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise ConfigError("CASTSEL_BACKEND=numba but numba is not importable")
        _impl = kernels_np
        BACKEND = "numpy"
elif _requested == "numpy":
    _impl = kernels_np
    BACKEND = "numpy"
else:
    raise ConfigError(f"CASTSEL_BACKEND must be auto, numba, or numpy, got {_requested!r}")

knn_scan = _impl.knn_scan
solve_sigma_batch = _impl.solve_sigma_batch
pairwise_sq = _impl.pairwise_sq
pair_sq = _impl.pair_sq
farthest_points = _impl.farthest_points

__all__ = [
    "BACKEND",
    "knn_scan",
    "solve_sigma_batch",
    "pairwise_sq",
    "pair_sq",
    "farthest_points",
]
