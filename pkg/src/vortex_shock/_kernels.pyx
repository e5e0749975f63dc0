# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid kernels; same contracts as ``_kernels_py``."""

import numpy as np
from libc.math cimport fabs


def radial_potential(const double[:, :] omega, double dr):
    cdef Py_ssize_t nr = omega.shape[0], nz = omega.shape[1], j, i
    face_a = np.empty((nr, nz))
    centre_a = np.empty((nr, nz))
    acc_a = np.zeros(nz)
    cdef double[:, ::1] face = face_a
    cdef double[:, ::1] centre = centre_a
    cdef double[::1] acc = acc_a
    for j in range(nr - 1, -1, -1):
        for i in range(nz):
            acc[i] = acc[i] + omega[j, i]
            face[j, i] = -dr * acc[i]
            centre[j, i] = face[j, i] + 0.5 * dr * omega[j, i]
    return face_a, centre_a


cdef inline double _minmod(double a, double b) nogil:
    if a * b <= 0.0:
        return 0.0
    return a if fabs(a) < fabs(b) else b


cdef inline double _w(const double[:, :] w, Py_ssize_t j, Py_ssize_t i, Py_ssize_t n) nogil:
    if i < 0:
        return w[j, 0]
    if i >= n:
        return w[j, n - 1]
    return w[j, i]


cdef inline double _slope(const double[:, :] w, Py_ssize_t j, Py_ssize_t i, Py_ssize_t n) nogil:
    cdef double c = _w(w, j, i, n)
    return _minmod(c - _w(w, j, i - 1, n), _w(w, j, i + 1, n) - c)


def muscl_llf_rhs(const double[:, :] omega, const double[:, :] phi, double dz):
    cdef Py_ssize_t nr = omega.shape[0], n = omega.shape[1], j, i
    out_a = np.empty((nr, n))
    flux_a = np.empty(n + 1)
    cdef double[:, ::1] out = out_a
    cdef double[::1] flux = flux_a
    cdef double wl, wr, a, pl, pr
    with nogil:
        for j in range(nr):
            for i in range(-1, n):
                wl = _w(omega, j, i, n) + 0.5 * _slope(omega, j, i, n)
                wr = _w(omega, j, i + 1, n) - 0.5 * _slope(omega, j, i + 1, n)
                pl = phi[j, i] if i >= 0 else phi[j, 0]
                pr = phi[j, i + 1] if i + 1 < n else phi[j, n - 1]
                a = 0.5 * (pl + pr)
                flux[i + 1] = 0.5 * a * (wl + wr) - 0.5 * fabs(a) * (wr - wl)
            for i in range(n):
                out[j, i] = -(flux[i + 1] - flux[i]) / dz
    return out_a


cdef inline double _dr(const double[:, :] f, Py_ssize_t j, Py_ssize_t i, Py_ssize_t nr,
                       double dr, double parity) nogil:
    cdef double lo, hi
    lo = parity * f[0, i] if j == 0 else f[j - 1, i]
    if j == nr - 1:
        hi = 3.0 * f[nr - 1, i] - 3.0 * f[nr - 2, i] + f[nr - 3, i]
    else:
        hi = f[j + 1, i]
    return (hi - lo) / (2.0 * dr)


cdef inline double _dz(const double[:, :] f, Py_ssize_t j, Py_ssize_t i, Py_ssize_t nz,
                       double dz) nogil:
    cdef double lo, hi
    if i == 0:
        lo = 3.0 * f[j, 0] - 3.0 * f[j, 1] + f[j, 2]
    else:
        lo = f[j, i - 1]
    if i == nz - 1:
        hi = 3.0 * f[j, nz - 1] - 3.0 * f[j, nz - 2] + f[j, nz - 3]
    else:
        hi = f[j, i + 1]
    return (hi - lo) / (2.0 * dz)


def q_operator(const double[:, :] omega, const double[:, :] phi, const double[:, :] sigma,
               const double[:] r, double dr, double dz, double eps):
    cdef Py_ssize_t nr = omega.shape[0], nz = omega.shape[1], j, i
    out_a = np.empty((nr, nz))
    cdef double[:, ::1] out = out_a
    cdef double rj, w_r, w_z, p_z, s_r, s_z
    with nogil:
        for j in range(nr):
            rj = r[j]
            for i in range(nz):
                w_r = _dr(omega, j, i, nr, dr, -1.0)
                w_z = _dz(omega, j, i, nz, dz)
                p_z = _dz(phi, j, i, nz, dz)
                s_r = _dr(sigma, j, i, nr, dr, -1.0)
                s_z = _dz(sigma, j, i, nz, dz)
                out[j, i] = ((-rj * p_z + eps * s_z) * w_r
                             + (phi[j, i] + rj * omega[j, i] - sigma[j, i] / rj - eps * s_r) * w_z
                             - (s_z / rj) * omega[j, i])
    return out_a
