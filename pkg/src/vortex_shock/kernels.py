"""Grid kernels: the compiled extension when it is importable, numpy otherwise.

Set ``VORTEX_SHOCK_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("VORTEX_SHOCK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"

d_r = _kernels_py.d_r
d_z = _kernels_py.d_z


def radial_potential(omega, dr):
    return _impl.radial_potential(np.ascontiguousarray(omega, dtype=float), float(dr))


def muscl_llf_rhs(omega, phi, dz):
    return _impl.muscl_llf_rhs(np.ascontiguousarray(omega, dtype=float),
                               np.ascontiguousarray(phi, dtype=float), float(dz))


def q_operator(omega, phi, sigma, r, dr, dz, eps):
    return _impl.q_operator(
        np.ascontiguousarray(omega, dtype=float), np.ascontiguousarray(phi, dtype=float),
        np.ascontiguousarray(sigma, dtype=float), np.ascontiguousarray(r, dtype=float),
        float(dr), float(dz), float(eps),
    )
