import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortex_shock import _kernels_py as py
from vortex_shock import kernels

try:
    from vortex_shock import _kernels as cx
except ImportError:
    cx = None

needs_ext = pytest.mark.skipif(cx is None, reason="compiled extension not built")


@needs_ext
@settings(max_examples=30, deadline=None)
@given(st.integers(4, 30), st.integers(4, 40), st.integers(0, 2**32 - 1))
def test_backends_agree(nr, nz, seed):
    rng = np.random.default_rng(seed)
    w, p, s = (rng.standard_normal((nr, nz)) for _ in range(3))
    r = (np.arange(nr) + 0.5) * 0.1
    for a, b in zip(py.radial_potential(w, 0.1), cx.radial_potential(w, 0.1)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(py.muscl_llf_rhs(w, p, 0.2), cx.muscl_llf_rhs(w, p, 0.2),
                               rtol=1e-13, atol=1e-12)
    np.testing.assert_allclose(py.q_operator(w, p, s, r, 0.1, 0.2, 0.3),
                               cx.q_operator(w, p, s, r, 0.1, 0.2, 0.3), rtol=1e-13, atol=1e-11)


@needs_ext
def test_compiled_kernels_accept_read_only_input():
    w = np.ones((6, 6))
    w.setflags(write=False)
    cx.radial_potential(w, 0.5)


def test_backend_selection_env():
    env = dict(os.environ, VORTEX_SHOCK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from vortex_shock import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("compiled", "python")


def test_flux_form_is_conservative(rng):
    w = np.zeros((5, 40))
    w[:, 5:35] = rng.standard_normal((5, 30))
    p = rng.standard_normal((5, 40))
    rhs = kernels.muscl_llf_rhs(w, p, 0.1)
    assert np.max(np.abs(rhs.sum(axis=1))) < 1e-12


def test_muscl_keeps_constant_state():
    rhs = kernels.muscl_llf_rhs(np.full((3, 20), 2.0), np.full((3, 20), 0.7), 0.1)
    assert np.max(np.abs(rhs)) < 1e-14


def test_radial_derivative_parity():
    dr = 0.1
    r = (np.arange(10) + 0.5) * dr
    even = np.repeat((r**2)[:, None], 3, axis=1)
    odd = np.repeat((r**3 - r)[:, None], 3, axis=1)
    np.testing.assert_allclose(kernels.d_r(even, dr, 1.0)[:-1], 2 * r[:-1, None] + 0 * even[:-1], atol=1e-12)
    got = kernels.d_r(odd, dr, -1.0)[0]
    assert np.allclose(got, 3 * r[0]**2 - 1 + dr**2, atol=1e-12)


def test_z_derivative_exact_for_quadratics():
    z = np.linspace(-1, 1, 11)
    f = np.repeat((z**2 - 3 * z)[None, :], 2, axis=0)
    np.testing.assert_allclose(kernels.d_z(f, z[1] - z[0]), np.repeat((2 * z - 3)[None, :], 2, axis=0), atol=1e-12)
