"""Finite-volume solver for ``d_t omega + d_z(phi omega) = 0`` with ``phi = d_r^{-1} omega``.

Each r-row is advanced in conservation form with a MUSCL/local Lax-Friedrichs
flux and SSP-RK3 in time.  The potential is rebuilt from omega at every stage
by the discrete radial antiderivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .fields import Grid2D, GriddedField, ScalarField, sample

BOUNDARY_TOL = 1e-8
CFL_SLACK = 1e-12


class NumericalError(RuntimeError):
    """CFL violation, non-finite values or boundary contamination."""


class CFLError(NumericalError):
    def __init__(self, dt, dt_max):
        self.dt, self.dt_max = float(dt), float(dt_max)
        super().__init__(f"dt = {self.dt:.6e} violates the CFL bound; admissible dt <= {self.dt_max:.6e}")


class NonFiniteError(NumericalError):
    def __init__(self, grid: Grid2D, j, i, t):
        self.node = (int(j), int(i))
        super().__init__(
            f"non-finite vorticity at node (j={j}, i={i}) = (r={grid.r_nodes[j]:.6g}, "
            f"z={grid.z_nodes[i]:.6g}) at t={t:.6g}")


class BoundaryError(NumericalError):
    pass


def discrete_potential(omega: np.ndarray, dr: float) -> np.ndarray:
    """Node values of the discrete radial antiderivative (midpoint-corrected sum)."""
    return kernels.radial_potential(omega, dr)[1]


@dataclass(frozen=True)
class SolverState:
    grid: Grid2D
    omega: GriddedField
    phi: GriddedField
    t: float
    cfl: float

    @classmethod
    def from_values(cls, grid, omega, t, cfl):
        return cls(grid, GriddedField(grid, omega),
                   GriddedField(grid, discrete_potential(omega, grid.dr)), float(t), cfl)

    def max_dt(self) -> float:
        speed = float(np.max(np.abs(self.phi.values)))
        return np.inf if speed == 0.0 else self.cfl * self.grid.dz / speed

    def row_mass(self) -> np.ndarray:
        return self.omega.values.sum(axis=1) * self.grid.dz


def rhs(omega: np.ndarray, grid: Grid2D) -> np.ndarray:
    phi = discrete_potential(omega, grid.dr)
    return kernels.muscl_llf_rhs(omega, phi, grid.dz)


def _check(values, grid, t):
    bad = ~np.isfinite(values)
    if bad.any():
        j, i = np.argwhere(bad)[0]
        raise NonFiniteError(grid, j, i, t)


def step(state: SolverState, dt: float) -> SolverState:
    """One SSP-RK3 step."""
    dt_max = state.max_dt()
    if dt <= 0 or dt > dt_max * (1 + CFL_SLACK):
        raise CFLError(dt, dt_max)
    g = state.grid
    w0 = state.omega.values
    w1 = w0 + dt * rhs(w0, g)
    w2 = 0.75 * w0 + 0.25 * (w1 + dt * rhs(w1, g))
    w3 = w0 / 3.0 + 2.0 / 3.0 * (w2 + dt * rhs(w2, g))
    t = state.t + dt
    _check(w3, g, t)
    edge = max(np.max(np.abs(w3[:, 0])), np.max(np.abs(w3[:, -1])))
    if edge > BOUNDARY_TOL:
        raise BoundaryError(
            f"|omega| = {edge:.3e} reached the z boundary at t = {t:.6g}; widen the z extent")
    return SolverState.from_values(g, w3, t, state.cfl)


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    masses: list = field(default_factory=list)

    @property
    def times(self):
        return [s.t for s in self.snapshots]

    def mass_drift(self) -> float:
        """Largest per-row mass change, relative to the row's initial L1 norm."""
        m0 = self.masses[0]
        scale = np.abs(self.snapshots[0].omega.values).sum(axis=1) * self.snapshots[0].grid.dz
        scale = np.where(scale > 0, scale, 1.0)
        return max(float(np.max(np.abs(m - m0) / scale)) for m in self.masses)


def run(initial: ScalarField, grid: Grid2D, horizon: float, cfl: float = 0.4,
        snapshot_times=None) -> Trajectory:
    """Integrate to ``horizon``, landing exactly on each requested snapshot time."""
    times = sorted(set([0.0, float(horizon)] + [float(s) for s in (snapshot_times or [])]))
    if times[0] < 0 or times[-1] > horizon:
        raise ValueError("snapshot times must lie in [0, horizon]")
    state = SolverState.from_values(grid, sample(initial, grid).values, 0.0, cfl)
    traj = Trajectory()
    for target in times:
        while state.t < target - 1e-14 * max(1.0, target):
            dt = min(state.max_dt(), target - state.t)
            state = step(state, dt)
        state = replace(state, t=target)
        traj.snapshots.append(state)
        traj.masses.append(state.row_mass())
    return traj
