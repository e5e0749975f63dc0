"""Scalar fields on the half-plane (r, z), tensor grids and the radial antiderivative.

Fields are vectorised callables ``f(r, z)`` that broadcast over numpy arrays.
The radial antiderivative

    phi(r, z) = -int_r^inf omega(rho, z) d rho

is evaluated pointwise by adaptive composite Gauss-Legendre quadrature on
``[r, R_sup]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

Func = Callable[[np.ndarray, np.ndarray], np.ndarray]

TAIL_TOL = 1e-12
QUAD_TOL = 1e-10
GL_ORDER = 12
MAX_PANELS = 1024

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class FieldError(ValueError):
    """Raised for non-finite samples or malformed grids."""


class QuadratureError(RuntimeError):
    def __init__(self, r, z, estimate):
        self.r, self.z = float(r), float(z)
        super().__init__(
            f"radial quadrature did not converge at (r={self.r:.6g}, z={self.z:.6g}) "
            f"within {MAX_PANELS} panels (last difference {estimate:.3e})"
        )


def fd_step(x):
    """Finite-difference step balancing truncation and roundoff."""
    return np.maximum(1e-5, np.sqrt(np.finfo(float).eps) * (1.0 + np.abs(x)))


@dataclass(frozen=True)
class ScalarField:
    """A smooth decaying function of (r, z) with optional analytic derivatives.

    ``support_radius`` is the radius beyond which ``|f| < tail_tol``.
    """

    func: Func
    d_dr: Optional[Func] = None
    d_dz: Optional[Func] = None
    d_dz2: Optional[Func] = None
    support_radius: float = np.inf
    tail_tol: float = TAIL_TOL
    name: str = ""

    def __call__(self, r, z):
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        return self.func(r, z)

    eval = __call__

    def scaled(self, a: float) -> "ScalarField":
        return self.combine(self, a, None, 0.0)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return self.combine(self, 1.0, other, 1.0)

    def __rmul__(self, a: float) -> "ScalarField":
        return self.scaled(float(a))

    @staticmethod
    def combine(f, a, g=None, b=0.0) -> "ScalarField":
        """Linear combination ``a*f + b*g``; derivatives kept where both have them."""
        if g is None:
            def lin(pf, pg):
                return None if pf is None else (lambda r, z: a * pf(r, z))
            return ScalarField(
                lin(f.func, None), lin(f.d_dr, None), lin(f.d_dz, None),
                lin(f.d_dz2, None), f.support_radius, f.tail_tol, f"{a}*{f.name}",
            )

        def lin(pf, pg):
            if pf is None or pg is None:
                return None
            return lambda r, z: a * pf(r, z) + b * pg(r, z)

        return ScalarField(
            lin(f.func, g.func), lin(f.d_dr, g.d_dr), lin(f.d_dz, g.d_dz),
            lin(f.d_dz2, g.d_dz2), max(f.support_radius, g.support_radius),
            max(f.tail_tol, g.tail_tol), f"{a}*{f.name}+{b}*{g.name}",
        )


def zero_field() -> ScalarField:
    z0 = lambda r, z: np.zeros(np.broadcast(r, z).shape)
    return ScalarField(z0, z0, z0, z0, support_radius=0.0, name="zero")


def estimate_support_radius(func: Func, tail_tol=TAIL_TOL, r_search=60.0, n_theta=721):
    """Smallest radius R such that ``|func| < tail_tol`` on every circle beyond R.

    Scans circles in the half-plane r >= 0 from the outside in.
    """
    theta = np.linspace(-np.pi / 2, np.pi / 2, n_theta)
    radii = np.arange(r_search, 0.0, -0.05)
    for rad in radii:
        vals = np.abs(func(rad * np.cos(theta), rad * np.sin(theta)))
        if np.max(vals) >= tail_tol:
            return float(rad + 0.05)
    return 0.0


# -- radial quadrature -------------------------------------------------------

def _gl_panels(f: Func, a, b, z, n):
    """Composite Gauss-Legendre on [a, b] with n equal panels, vectorised over points."""
    h = (b - a) / n
    k = np.arange(n)
    # points x panels x nodes
    left = a[:, None] + h[:, None] * k[None, :]
    nodes = left[:, :, None] + 0.5 * h[:, None, None] * (_GL_X[None, None, :] + 1.0)
    vals = f(nodes, np.broadcast_to(z[:, None, None], nodes.shape))
    return 0.5 * h * np.einsum("pkn,n->p", vals, _GL_W)


def integrate_outward(f: Func, r, z, upper: float, tol=QUAD_TOL, panels=4):
    """``int_r^upper f(rho, z) d rho`` for arrays r, z.

    Panel count doubles until successive estimates differ by less than tol.
    """
    r, z = np.broadcast_arrays(np.asarray(r, float), np.asarray(z, float))
    shape = r.shape
    r = r.ravel().copy()
    z = z.ravel().copy()
    out = np.zeros(r.size)
    live = np.flatnonzero(r < upper)
    if live.size == 0 or not np.isfinite(upper):
        if not np.isfinite(upper) and live.size:
            raise ValueError("integrate_outward needs a finite upper limit")
        return out.reshape(shape)
    a = r[live]
    b = np.full(live.size, upper)
    zz = z[live]
    n = panels
    prev = _gl_panels(f, a, b, zz, n)
    todo = np.arange(live.size)
    while True:
        n *= 2
        cur = _gl_panels(f, a[todo], b[todo], zz[todo], n)
        diff = np.abs(cur - prev[todo])
        done = diff < tol
        out[live[todo[done]]] = cur[done]
        prev[todo] = cur
        todo = todo[~done]
        if todo.size == 0:
            break
        if n >= MAX_PANELS:
            i = todo[np.argmax(diff[~done])]
            raise QuadratureError(a[i], zz[i], float(np.max(diff[~done])))
    return out.reshape(shape)


def antiderivative_r(omega: ScalarField, quad_tol: float = QUAD_TOL) -> ScalarField:
    """Radial antiderivative decaying at infinity, ``phi = -int_r^inf omega``.

    The result's ``d_dr`` is ``omega`` itself; ``d_dz``/``d_dz2`` are
    quadratures of omega's analytic z-derivatives when those exist.
    """
    upper = float(omega.support_radius)
    if upper == 0.0:
        return zero_field()

    def integ(g):
        if g is None:
            return None
        return lambda r, z: -integrate_outward(g, r, z, upper, quad_tol)

    return ScalarField(
        func=integ(omega.func),
        d_dr=omega.func,
        d_dz=integ(omega.d_dz),
        d_dz2=integ(omega.d_dz2),
        support_radius=upper,
        tail_tol=omega.tail_tol,
        name=f"antiderivative_r({omega.name})",
    )


def diff_z(f: ScalarField) -> ScalarField:
    """z-derivative; analytic when available, centred differences otherwise."""
    if f.d_dz is not None:
        return ScalarField(f.d_dz, None, f.d_dz2, None, f.support_radius, f.tail_tol,
                           f"d_dz({f.name})")

    def fd(r, z):
        r = np.asarray(r, float)
        z = np.asarray(z, float)
        h = fd_step(z)
        return (f.func(r, z + h) - f.func(r, z - h)) / (2 * h)

    return ScalarField(fd, support_radius=f.support_radius, tail_tol=f.tail_tol,
                       name=f"d_dz({f.name})")


def diff_r(f: ScalarField) -> ScalarField:
    """r-derivative; analytic when available, centred differences otherwise.

    The finite-difference branch is one-sided at r < h so it never samples r < 0.
    """
    if f.d_dr is not None:
        return ScalarField(f.d_dr, support_radius=f.support_radius, tail_tol=f.tail_tol,
                           name=f"d_dr({f.name})")

    def fd(r, z):
        r = np.asarray(r, float)
        z = np.asarray(z, float)
        h = fd_step(r)
        lo = np.maximum(r - h, 0.0)
        return (f.func(r + h, z) - f.func(lo, z)) / (r + h - lo)

    return ScalarField(fd, support_radius=f.support_radius, tail_tol=f.tail_tol,
                       name=f"d_dr({f.name})")


# -- grids -------------------------------------------------------------------

@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on [0, r_max] x [z_min, z_max].

    Radial nodes sit at cell centres ``(j + 1/2) dr`` so r = 0 is never a node;
    axial nodes ``z_min + i dz`` include both ends.
    """

    nr: int
    nz: int
    r_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if self.nr < 4 or self.nz < 4:
            raise FieldError(f"grid needs nr >= 4 and nz >= 4, got {self.nr}x{self.nz}")
        if not (self.r_max > 0 and self.z_max > self.z_min):
            raise FieldError("grid extents must satisfy r_max > 0 and z_max > z_min")

    @property
    def dr(self) -> float:
        return self.r_max / self.nr

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.nz - 1)

    @cached_property
    def r_nodes(self) -> np.ndarray:
        return (np.arange(self.nr) + 0.5) * self.dr

    @cached_property
    def z_nodes(self) -> np.ndarray:
        return self.z_min + np.arange(self.nz) * self.dz

    def mesh(self):
        return np.meshgrid(self.r_nodes, self.z_nodes, indexing="ij")

    @property
    def shape(self):
        return (self.nr, self.nz)

    def refined(self, factor: int = 2) -> "Grid2D":
        return Grid2D(self.nr * factor, (self.nz - 1) * factor + 1, self.r_max,
                      self.z_min, self.z_max)

    def as_dict(self) -> dict:
        return {"nr": self.nr, "nz": self.nz, "r_max": self.r_max,
                "z_min": self.z_min, "z_max": self.z_max,
                "dr": self.dr, "dz": self.dz}


@dataclass(frozen=True)
class GriddedField:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise FieldError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        bad = ~np.isfinite(v)
        if bad.any():
            j, i = np.argwhere(bad)[0]
            raise FieldError(
                f"non-finite value at node (j={j}, i={i}) = "
                f"(r={self.grid.r_nodes[j]:.6g}, z={self.grid.z_nodes[i]:.6g})"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def interpolate(self, r, z, method="cubic"):
        interp = RegularGridInterpolator(
            (self.grid.r_nodes, self.grid.z_nodes), self.values, method=method,
            bounds_error=False, fill_value=None,
        )
        r, z = np.broadcast_arrays(np.asarray(r, float), np.asarray(z, float))
        return interp(np.stack([r.ravel(), z.ravel()], axis=-1)).reshape(r.shape)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def sample(f: ScalarField, grid: Grid2D) -> GriddedField:
    R, Z = grid.mesh()
    return GriddedField(grid, np.broadcast_to(f(R, Z), grid.shape).astype(float))
