"""Hot-loop kernels with a compiled backend and a numpy fallback chosen at import.

Set ``THROWCATCH_PURE_PYTHON=1`` to force the numpy path. ``BACKEND`` reports
which one is active. Both take contiguous float64 arrays and mutate in place
where noted.
"""

import os

import numpy as np

from throwcatch._kernels import _pykernels

if os.environ.get("THROWCATCH_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from throwcatch._kernels import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def backends():
    """Every importable backend, by name."""
    found = {"python": _pykernels}
    try:
        from throwcatch._kernels import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found


def physics_step(*args):
    _impl.physics_step(*args)


def catch_components(*args):
    _impl.catch_components(*args)


def gae(rewards, values, dones, gamma, lam):
    return _impl.gae(
        np.ascontiguousarray(rewards, dtype=np.float64),
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(dones, dtype=np.float64),
        float(gamma),
        float(lam),
    )
