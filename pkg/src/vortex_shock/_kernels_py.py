"""Pure numpy versions of the grid kernels (fallback for the compiled core).

Arrays are laid out ``[j, i]`` with j the radial index and i the axial index.
"""

import numpy as np


def radial_potential(omega, dr):
    """Discrete radial antiderivative.

    Returns ``(face, centre)``: ``face[j] = -dr * sum_{k >= j} omega[k]`` sits at
    r = j dr and satisfies ``(face[j+1] - face[j]) / dr == omega[j]``; ``centre``
    adds back half a cell so it is second-order accurate at the nodes.
    """
    omega = np.ascontiguousarray(omega, dtype=float)
    acc = np.cumsum(omega[::-1], axis=0)[::-1]
    face = -dr * acc
    centre = face + 0.5 * dr * omega
    return face, centre


def _minmod(a, b):
    return np.where(a * b > 0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def muscl_llf_rhs(omega, phi, dz):
    """``-d_z(phi omega)`` row by row: minmod-limited linear reconstruction,
    local Lax-Friedrichs flux with speed |phi| at the face, zero-gradient ends."""
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=float)
    wg = np.concatenate([omega[:, :1], omega[:, :1], omega, omega[:, -1:], omega[:, -1:]], axis=1)
    pg = np.concatenate([phi[:, :1], phi, phi[:, -1:]], axis=1)
    d = wg[:, 1:] - wg[:, :-1]
    slope = _minmod(d[:, :-1], d[:, 1:])            # cells -1 .. n
    wc = wg[:, 1:-1]
    wl = wc[:, :-1] + 0.5 * slope[:, :-1]           # faces -1/2 .. n-1/2
    wr = wc[:, 1:] - 0.5 * slope[:, 1:]
    a = 0.5 * (pg[:, :-1] + pg[:, 1:])
    flux = 0.5 * a * (wl + wr) - 0.5 * np.abs(a) * (wr - wl)
    return -(flux[:, 1:] - flux[:, :-1]) / dz


def d_r(f, dr, parity):
    """Centred r-derivative; axis ghost by parity (+1 even, -1 odd), quadratic
    extrapolation at the outer edge."""
    g = np.empty((f.shape[0] + 2, f.shape[1]))
    g[1:-1] = f
    g[0] = parity * f[0]
    g[-1] = 3 * f[-1] - 3 * f[-2] + f[-3]
    return (g[2:] - g[:-2]) / (2 * dr)


def d_z(f, dz):
    """Centred z-derivative with quadratic-extrapolation ghosts at both ends."""
    g = np.empty((f.shape[0], f.shape[1] + 2))
    g[:, 1:-1] = f
    g[:, 0] = 3 * f[:, 0] - 3 * f[:, 1] + f[:, 2]
    g[:, -1] = 3 * f[:, -1] - 3 * f[:, -2] + f[:, -3]
    return (g[:, 2:] - g[:, :-2]) / (2 * dz)


def q_operator(omega, phi, sigma, r, dr, dz, eps):
    """Perturbation operator Q_eps[omega] with centred second-order differences."""
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    rc = np.asarray(r, dtype=float)[:, None]
    w_r = d_r(omega, dr, -1.0)
    w_z = d_z(omega, dz)
    p_z = d_z(phi, dz)
    s_r = d_r(sigma, dr, -1.0)
    s_z = d_z(sigma, dz)
    return ((-rc * p_z + eps * s_z) * w_r
            + (phi + rc * omega - sigma / rc - eps * s_r) * w_z
            - (s_z / rc) * omega)
