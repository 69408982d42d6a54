"""Backend selection for the hot numeric kernels.

The environment variable ``NATGALORE_BACKEND`` picks the implementation:

* ``auto`` (default): numba if importable, else pure numpy
* ``numba``: require the JIT kernels, fail loudly if numba is missing
* ``numpy``: force the pure-numpy fallback

Both backends expose ``cholesky``, ``solve_cho``, ``mgs`` and
``adam_direction`` with identical contracts.
"""

import os

from . import _numpy

_requested = os.environ.get("NATGALORE_BACKEND", "auto").lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"NATGALORE_BACKEND must be auto, numba or numpy, got {_requested!r}"
    )

if _requested == "numpy":
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        _impl = _numpy
        BACKEND = "numpy"

cholesky = _impl.cholesky
solve_cho = _impl.solve_cho
mgs = _impl.mgs
adam_direction = _impl.adam_direction


def get_backend(name):
    """Return the kernel module for an explicit backend name (benchmarking)."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown backend {name!r}")
