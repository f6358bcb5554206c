"""Hot-loop kernel backend selection.

Two interchangeable implementations exist for every kernel: a numba
``@njit`` version and a pure-numpy fallback.  The active backend is chosen
once at import time from the ``VOXSEG_BACKEND`` environment variable:

* ``auto`` (default) - numba when importable, numpy otherwise
* ``numpy``          - force the pure-numpy kernels
* ``numba``          - require the JIT kernels; raises if numba is missing

``benchmarks/bench_kernels.py`` times both implementations side by side.
"""

from __future__ import annotations

import os

BACKEND_ENV = "VOXSEG_BACKEND"


def _select():
    mode = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if mode in ("numpy", "off", "0", "false"):
        from . import kernels_numpy as impl

        return impl, "numpy"
    if mode in ("numba", "on", "1", "true"):
        from . import kernels_numba as impl

        return impl, "numba"
    if mode not in ("", "auto"):
        raise ValueError(f"unrecognized {BACKEND_ENV}={mode!r}; use auto, numba, or numpy")
    try:
        from . import kernels_numba as impl

        return impl, "numba"
    except ImportError:
        from . import kernels_numpy as impl

        return impl, "numpy"


_impl, _name = _select()

label_vote_counts = _impl.label_vote_counts
surface_mask = _impl.surface_mask


def backend() -> str:
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return _name
