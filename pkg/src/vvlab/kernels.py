"""Backend dispatch for the hot kernels.

The numba path is used when numba imports cleanly; set VVLAB_NUMBA=0 in
the environment to force the pure-numpy fallback. `get_backend` exposes
both for side-by-side testing and benchmarking.
"""

import os

from . import _kernels_numpy

RUSANOV = _kernels_numpy.RUSANOV
HLL = _kernels_numpy.HLL

FLUX_IDS = {"rusanov": RUSANOV, "hll": HLL}


def _want_numba() -> bool:
    return os.environ.get("VVLAB_NUMBA", "1") != "0"


def get_backend(name: str):
    """Return the kernel module for 'numba' or 'numpy'."""
    if name == "numpy":
        return _kernels_numpy
    if name == "numba":
        from . import _kernels_numba

        return _kernels_numba
    raise ValueError(f"unknown kernel backend {name!r}")


if _want_numba():
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = _kernels_numpy
        BACKEND = "numpy"
else:
    _impl = _kernels_numpy
    BACKEND = "numpy"

face_fluxes = _impl.face_fluxes
cell_gradients = _impl.cell_gradients
