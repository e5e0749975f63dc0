"""Finite-dimensional axisymmetric Euler written as a perturbation of the limit model.

With ``eps = 1/(d-2)`` the vorticity obeys

    d_t omega + phi d_z omega + omega d_z phi + eps Q_eps[omega] = 0,

where ``phi = d_r^{-1} omega`` and sigma solves

    -Delta_eps sigma = -(d_r^2 + d_z^2)(r phi),
    -Delta_eps = -eps (d_r^2 + d_z^2) - (1/r) d_r + 1/r^2.

The renormalised stream function is ``-r phi + eps sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import onenormest, splu

from . import kernels
from .direct_solver import CFLError, NonFiniteError, NumericalError, discrete_potential
from .fields import Grid2D, GriddedField, ScalarField, sample

SOLVER_TOL = 1e-10


class EpsilonError(ValueError):
    pass


class EllipticError(NumericalError):
    pass


@dataclass(frozen=True)
class Epsilon:
    """Perturbation size ``eps = 1/(d - 2)``; ``d`` is None for a directly set eps."""

    eps: float
    d: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0) or not math.isfinite(self.eps):
            raise EpsilonError(f"eps must lie in (0, 1], got {self.eps!r}; "
                               "eps = 0 is the limit model, use the characteristics engine")
        if self.d is not None and self.eps * (self.d - 2) != 1.0:
            raise EpsilonError(f"eps = {self.eps!r} is not 1/(d-2) for d = {self.d}")

    @classmethod
    def from_dimension(cls, d: int) -> "Epsilon":
        if int(d) != d or d < 3:
            raise EpsilonError(f"dimension must be an integer >= 3, got {d!r}")
        return cls(1.0 / (int(d) - 2), int(d))

    @property
    def non_integer(self) -> bool:
        return self.d is None


def _as_eps(eps) -> Epsilon:
    return eps if isinstance(eps, Epsilon) else Epsilon(float(eps))


# -- elliptic problem --------------------------------------------------------

def _operator(grid: Grid2D, eps: float) -> sp.csr_matrix:
    nr, nz = grid.shape
    dr2, dz2 = grid.dr**2, grid.dz**2
    r = grid.r_nodes
    J, I = np.meshgrid(np.arange(nr), np.arange(nz), indexing="ij")
    k = J * nz + I
    inner = (I > 0) & (I < nz - 1)

    rj = r[J]
    east = -eps / dr2 - 1.0 / (2 * rj * grid.dr)
    west = -eps / dr2 + 1.0 / (2 * rj * grid.dr)
    diag = eps * (2 / dr2 + 2 / dz2) + 1.0 / rj**2
    # odd ghosts: sigma(-r0) = -sigma(r0) at the axis, sigma(r_max) = 0 outside
    diag = np.where(J == 0, diag - west, diag)
    diag = np.where(J == nr - 1, diag - east, diag)

    rows, cols, vals = [], [], []

    def add(mask, col, val):
        rows.append(k[mask])
        cols.append(col[mask])
        vals.append(np.broadcast_to(val, k.shape)[mask])

    add(inner, k, diag)
    add(inner & (J < nr - 1), k + nz, east)
    add(inner & (J > 0), k - nz, west)
    add(inner, k + 1, np.full(k.shape, -eps / dz2))
    add(inner, k - 1, np.full(k.shape, -eps / dz2))
    add(~inner, k, np.ones(k.shape))
    n = nr * nz
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    """Discrete ``-Delta_eps`` on a grid, factorised once.

    Rows at z = z_min and z = z_max are Dirichlet (sigma = 0); the axis and r_max
    are closed by odd reflection.
    """

    grid: Grid2D
    eps: Epsilon
    matrix: sp.csr_matrix
    lu: object

    @classmethod
    def build(cls, grid: Grid2D, eps) -> "EllipticProblem":
        eps = _as_eps(eps)
        A = _operator(grid, eps.eps)
        try:
            lu = splu(A.tocsc())
        except RuntimeError as exc:
            cond = onenormest(A) / max(np.min(np.abs(A.diagonal())), 1e-300)
            raise EllipticError(
                f"factorisation of -Delta_eps failed for eps={eps.eps:g} on "
                f"{grid.nr}x{grid.nz} grid (condition estimate ~{cond:.3e}): {exc}") from exc
        return cls(grid, eps, A, lu)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(values, float).ravel()).reshape(self.grid.shape)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = np.asarray(rhs, float).ravel()
        x = self.lu.solve(b)
        res = self.scaled_residual(x, b)
        if res >= SOLVER_TOL:
            x = x + self.lu.solve(b - self.matrix @ x)
            res = self.scaled_residual(x, b)
        if not np.isfinite(res) or res >= SOLVER_TOL:
            raise EllipticError(f"sigma solve residual {res:.3e} >= {SOLVER_TOL:g} "
                                f"(eps={self.eps.eps:g}, grid {self.grid.nr}x{self.grid.nz})")
        return x.reshape(self.grid.shape)

    def scaled_residual(self, x, b) -> float:
        x = np.asarray(x).ravel()
        b = np.asarray(b).ravel()
        r = self.matrix @ x - b
        scale = abs(self.matrix).sum(axis=1).max() * np.max(np.abs(x)) + np.max(np.abs(b))
        return float(np.max(np.abs(r)) / scale) if scale > 0 else 0.0


def sigma_rhs(grid: Grid2D, phi: np.ndarray) -> np.ndarray:
    """``-(d_r^2 + d_z^2)(r phi)`` with the operator's ghost conventions; zero on z edges."""
    f = grid.r_nodes[:, None] * np.asarray(phi, float)
    g = np.zeros((f.shape[0] + 2, f.shape[1]))
    g[1:-1] = f
    g[0] = -f[0]
    g[-1] = -f[-1]
    lap = (g[2:] - 2 * f + g[:-2]) / grid.dr**2
    lap[:, 1:-1] += (f[:, 2:] - 2 * f[:, 1:-1] + f[:, :-2]) / grid.dz**2
    out = -lap
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


def solve_sigma(problem: EllipticProblem, phi: GriddedField) -> GriddedField:
    return GriddedField(problem.grid, problem.solve(sigma_rhs(problem.grid, phi.values)))


# -- perturbed dynamics ------------------------------------------------------

@dataclass(frozen=True)
class PerturbedState:
    grid: Grid2D
    omega: GriddedField
    phi: GriddedField
    sigma: GriddedField
    t: float
    eps: Epsilon

    @classmethod
    def from_omega(cls, problem: EllipticProblem, omega: np.ndarray, t=0.0):
        g = problem.grid
        phi = GriddedField(g, discrete_potential(omega, g.dr))
        return cls(g, GriddedField(g, omega), phi, solve_sigma(problem, phi), float(t),
                   problem.eps)


def assemble_Q(state: PerturbedState) -> GriddedField:
    g = state.grid
    q = kernels.q_operator(state.omega.values, state.phi.values, state.sigma.values,
                           g.r_nodes, g.dr, g.dz, state.eps.eps)
    bad = ~np.isfinite(q)
    if bad.any():
        j, i = np.argwhere(bad)[0]
        raise NonFiniteError(g, j, i, state.t)
    return GriddedField(g, q)


def _fields(problem, omega):
    g = problem.grid
    phi = discrete_potential(omega, g.dr)
    sigma = problem.solve(sigma_rhs(g, phi))
    return phi, sigma


def perturbed_rhs(problem: EllipticProblem, omega: np.ndarray) -> np.ndarray:
    """``-(phi d_z omega + omega d_z phi) - eps Q_eps[omega]``."""
    g = problem.grid
    phi, sigma = _fields(problem, omega)
    base = -(phi * kernels.d_z(omega, g.dz) + omega * kernels.d_z(phi, g.dz))
    q = kernels.q_operator(omega, phi, sigma, g.r_nodes, g.dr, g.dz, problem.eps.eps)
    return base - problem.eps.eps * q


def wave_speed(state: PerturbedState) -> float:
    """Largest advection speed of the full equation (phi and the Q_eps coefficients)."""
    g = state.grid
    e = state.eps.eps
    r = g.r_nodes[:, None]
    phi, sigma, w = state.phi.values, state.sigma.values, state.omega.values
    a_r = e * (-r * kernels.d_z(phi, g.dz) + e * kernels.d_z(sigma, g.dz))
    a_z = phi + e * (phi + r * w - sigma / r - e * kernels.d_r(sigma, g.dr, -1.0))
    return float(max(np.max(np.abs(phi)), np.max(np.abs(a_r)), np.max(np.abs(a_z))))


def max_dt(state: PerturbedState, cfl: float) -> float:
    s = wave_speed(state)
    return np.inf if s == 0.0 else cfl * min(state.grid.dr, state.grid.dz) / s


def step_perturbed(problem: EllipticProblem, state: PerturbedState, dt: float,
                   cfl: float = 0.4) -> PerturbedState:
    """One SSP-RK3 step; phi and sigma are refreshed at every stage."""
    limit = max_dt(state, cfl)
    if dt <= 0 or dt > limit * (1 + 1e-12):
        raise CFLError(dt, limit)
    w0 = state.omega.values
    w1 = w0 + dt * perturbed_rhs(problem, w0)
    w2 = 0.75 * w0 + 0.25 * (w1 + dt * perturbed_rhs(problem, w1))
    w3 = w0 / 3.0 + 2.0 / 3.0 * (w2 + dt * perturbed_rhs(problem, w2))
    bad = ~np.isfinite(w3)
    if bad.any():
        j, i = np.argwhere(bad)[0]
        raise NonFiniteError(state.grid, j, i, state.t + dt)
    return PerturbedState.from_omega(problem, w3, state.t + dt)


def run_perturbed(initial: ScalarField, grid: Grid2D, eps, horizon: float, cfl: float = 0.4,
                  snapshot_times=None, problem: Optional[EllipticProblem] = None):
    problem = problem or EllipticProblem.build(grid, eps)
    times = sorted(set([0.0, float(horizon)] + [float(s) for s in (snapshot_times or [])]))
    state = PerturbedState.from_omega(problem, sample(initial, grid).values)
    out = []
    for target in times:
        while state.t < target - 1e-14 * max(1.0, target):
            dt = min(max_dt(state, cfl), target - state.t)
            state = step_perturbed(problem, state, dt, cfl)
        state = replace(state, t=target)
        out.append(state)
    return out


# -- velocity and the divergence constraint ----------------------------------

def reconstruct_velocity(state: PerturbedState):
    """``u_r = -eps r d_z phi + eps^2 d_z sigma``,
    ``u_z = eps r d_r phi - eps^2 d_r sigma - eps sigma/r + (1 + eps) phi``."""
    g = state.grid
    e = state.eps.eps
    r = g.r_nodes[:, None]
    phi, sigma = state.phi.values, state.sigma.values
    u_r = -e * r * kernels.d_z(phi, g.dz) + e**2 * kernels.d_z(sigma, g.dz)
    u_z = (e * r * kernels.d_r(phi, g.dr, 1.0) - e**2 * kernels.d_r(sigma, g.dr, -1.0)
           - e * sigma / r + (1 + e) * phi)
    return GriddedField(g, u_r), GriddedField(g, u_z)


def velocity_from_stream(psi: GriddedField, eps):
    """``u_r = eps d_z psi``, ``u_z = -eps d_r psi - psi/r`` by grid differences."""
    e = _as_eps(eps).eps
    g = psi.grid
    v = psi.values
    u_r = e * np.gradient(v, g.dz, axis=1, edge_order=2)
    u_z = -e * np.gradient(v, g.dr, axis=0, edge_order=2) - v / g.r_nodes[:, None]
    return GriddedField(g, u_r), GriddedField(g, u_z)


def divergence_residual(u_r: GriddedField, u_z: GriddedField, eps) -> float:
    """Max-norm of ``eps (d_r u_r + d_z u_z) + u_r / r``."""
    if u_r.grid != u_z.grid:
        raise ValueError("velocity components live on different grids")
    e = _as_eps(eps).eps
    g = u_r.grid
    div = (np.gradient(u_r.values, g.dr, axis=0, edge_order=2)
           + np.gradient(u_z.values, g.dz, axis=1, edge_order=2))
    return float(np.max(np.abs(e * div + u_r.values / g.r_nodes[:, None])))
