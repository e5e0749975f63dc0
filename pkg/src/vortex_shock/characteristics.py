"""Exact solutions of the infinite-dimensional vorticity equation by characteristics.

For initial vorticity omega0 with potential phi0 = antiderivative_r(omega0) each
radius evolves independently under Burgers' equation in z.  Writing
y = h(r, z, t) for the label solving ``y + t phi0(r, y) = z``,

    phi(r, z, t)   = phi0(r, y)
    omega(r, z, t) = omega0(r, y) / (1 + t d_y phi0(r, y))

up to the blowup time ``T_max = 1 / (-inf d_z phi0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .fields import (QUAD_TOL, Grid2D, ScalarField, antiderivative_r, diff_z, fd_step)

ROOT_TOL = 1e-12
GUARD = 1e-3
NEWTON_MAX = 50
BISECT_MAX = 200
SCAN_SHAPE = (512, 1024)
MINIMIZER_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BlowupHorizonError(ValueError):
    def __init__(self, t, t_max, guard=None):
        self.t = float(t)
        self.t_max = float(t_max)
        if guard is None or self.t >= self.t_max:
            msg = f"t = {self.t:.17g} is at or past the blowup time T_max = {self.t_max:.17g}"
        else:
            msg = (f"t = {self.t:.17g} exceeds the guarded horizon (1 - {guard:g}) T_max "
                   f"with T_max = {self.t_max:.17g}; pass a smaller guard to go closer")
        super().__init__(msg)


class InvariantViolation(RuntimeError):
    """The monotone characteristic map failed to bracket a root."""


@dataclass(frozen=True)
class Minimizer:
    r: float
    z: float
    value: float
    omega0: float


@dataclass(frozen=True)
class CharacteristicSolution:
    omega0: ScalarField
    phi0: ScalarField
    dz_phi0: ScalarField
    inf_dz_phi0: float
    argmin: Optional[tuple]
    t_max: float
    minimizers: tuple = ()
    phi_bound: float = 0.0
    bracket_width: float = 0.0
    root_tol: float = ROOT_TOL
    guard: float = GUARD
    quad_tol: float = QUAD_TOL

    @property
    def blows_up(self) -> bool:
        return math.isfinite(self.t_max)

    @property
    def omega0_at_argmin(self) -> float:
        if self.argmin is None:
            return 0.0
        return float(self.omega0(*self.argmin))

    def horizon(self, guard=None) -> float:
        g = self.guard if guard is None else guard
        return (1.0 - g) * self.t_max


@dataclass(frozen=True)
class FlowPoint:
    r: np.ndarray
    z: np.ndarray
    t: np.ndarray
    y: np.ndarray
    jac: np.ndarray
    phi0: np.ndarray = field(repr=False)
    dphi0: np.ndarray = field(repr=False)


# -- building ----------------------------------------------------------------

def _scan(omega0: ScalarField, radius: float, shape):
    """Coarse tables of d_z phi0 and phi0 by trapezoidal integration inward from R."""
    rs = np.linspace(0.0, radius, shape[0])
    zs = np.linspace(-radius, radius, shape[1])
    R, Z = np.meshgrid(rs, zs, indexing="ij")
    wz = diff_z(omega0)(R, Z)
    w = omega0(R, Z)
    dr = rs[1] - rs[0]

    def inward(v):
        seg = 0.5 * (v[1:] + v[:-1]) * dr
        out = np.zeros_like(v)
        out[:-1] = -np.cumsum(seg[::-1], axis=0)[::-1]
        return out

    return rs, zs, inward(wz), inward(w)


def _golden(fun, a, b, tol):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > tol:
        if fc[0] <= fd[0]:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc[0] <= fd[0] else (d, fd)


def _refine(phi0: ScalarField, r0, z0, hr, hz, radius):
    """Polish a coarse minimiser of d_z phi0: golden section in r, Newton in z."""
    f = diff_z(phi0)
    fz = diff_z(f)

    def f_zz(r, z):
        h = fd_step(z)
        return (fz(r, z + h) - fz(r, z - h)) / (2 * h)

    def inner(r):
        lo, hi = z0 - 2 * hz, z0 + 2 * hz
        z = z0
        for _ in range(40):
            g = float(fz(r, z))
            gg = float(f_zz(r, z))
            if g < 0:
                lo = max(lo, z)
            else:
                hi = min(hi, z)
            step = g / gg if gg > 0 else np.inf
            zn = z - step
            if not (lo < zn < hi):
                zn = 0.5 * (lo + hi)
            if abs(zn - z) < 1e-13 * (1 + abs(z)):
                z = zn
                break
            z = zn
        # bracket collapse without a stationary point: fall back to a direct minimum
        val = float(f(r, z))
        for cand in (z0 - 2 * hz, z0 + 2 * hz):
            v = float(f(r, cand))
            if v < val:
                z, val = cand, v
        return val, z

    a = max(0.0, r0 - 2 * hr)
    b = min(radius, r0 + 2 * hr)
    r_best, (val, z_best) = _golden(inner, a, b, 1e-10)
    for r_end in (a, b):
        v, z = inner(r_end)
        if v < val or (v == val and r_end < r_best):
            r_best, val, z_best = r_end, v, z
    return r_best, z_best, val


def build_solution(omega0: ScalarField, quad_tol=QUAD_TOL, root_tol=ROOT_TOL,
                   guard=GUARD, scan_shape=SCAN_SHAPE) -> CharacteristicSolution:
    """Potential, infimum of d_z phi0 with its minimisers, and the blowup time."""
    phi0 = antiderivative_r(omega0, quad_tol)
    dz_phi0 = diff_z(phi0)
    radius = float(omega0.support_radius)
    common = dict(root_tol=root_tol, guard=guard, quad_tol=quad_tol)
    if radius == 0.0:
        return CharacteristicSolution(omega0, phi0, dz_phi0, 0.0, None, math.inf, **common)

    rs, zs, table, pot = _scan(omega0, radius, scan_shape)
    hr, hz = rs[1] - rs[0], zs[1] - zs[0]
    phi_bound = 1.1 * float(np.max(np.abs(pot))) + 1e-12
    grid_min = float(table.min())
    if grid_min > -omega0.tail_tol:
        return CharacteristicSolution(omega0, phi0, dz_phi0, 0.0, None, math.inf,
                                      phi_bound=phi_bound, **common)

    local = (table == ndimage.minimum_filter(table, size=3, mode="nearest"))
    idx = np.argwhere(local & (table <= grid_min + 0.05 * abs(grid_min)))
    order = np.lexsort((idx[:, 1], idx[:, 0], table[idx[:, 0], idx[:, 1]]))
    idx = idx[order][:8]

    found = []
    bracket = 0.0
    for j, i in idx:
        r, z, val = _refine(phi0, rs[j], zs[i], hr, hz, radius)
        if not np.isfinite(val) or val > table[j, i] + 1e-6 * abs(grid_min):
            # refinement degenerated; keep the grid point and report its bracket
            r, z, val = rs[j], zs[i], float(dz_phi0(rs[j], zs[i]))
            bracket = max(bracket, max(hr, hz))
        found.append((val, r, z))

    m = min(v for v, _, _ in found)
    mins = sorted({(round(r, 12), round(z, 12)): (v, r, z) for v, r, z in found
                   if v <= m + MINIMIZER_TOL}.values(), key=lambda t: (t[1], t[2]))
    minimizers = tuple(Minimizer(r, z, v, float(omega0(r, z))) for v, r, z in mins)
    # the BKM bound uses the minimiser with largest |omega0|; ties by smallest r, z
    best = max(minimizers, key=lambda p: (abs(p.omega0), -p.r, -p.z))
    return CharacteristicSolution(
        omega0, phi0, dz_phi0, m, (best.r, best.z), 1.0 / (-m), minimizers,
        phi_bound=phi_bound, bracket_width=bracket, **common,
    )


# -- evaluation --------------------------------------------------------------

def _check_time(sol: CharacteristicSolution, t, guard):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    if not sol.blows_up:
        return t
    tm = float(np.max(t))
    if tm >= sol.t_max:
        raise BlowupHorizonError(tm, sol.t_max)
    g = sol.guard if guard is None else guard
    if tm > (1.0 - g) * sol.t_max:
        raise BlowupHorizonError(tm, sol.t_max, g)
    return t


def _solve_labels(sol: CharacteristicSolution, r, z, t):
    """Safeguarded Newton for ``y + t phi0(r, y) = z``, bisection as fallback.

    Returns the label y, phi0(r, y) and d_y phi0(r, y) as flat arrays.
    """
    r, z, t = (a.ravel().astype(float) for a in np.broadcast_arrays(r, z, t))
    n = r.size
    y = z.copy()
    p_out = np.zeros(n)
    dp_out = np.zeros(n)
    span = t * sol.phi_bound
    lo = z - span
    hi = z + span
    act = np.arange(n)
    tol = sol.root_tol
    phi, dphi = sol.phi0, sol.dz_phi0

    for _ in range(NEWTON_MAX):
        if act.size == 0:
            break
        ra, ya, ta, za = r[act], y[act], t[act], z[act]
        p = phi(ra, ya)
        dp = dphi(ra, ya)
        g = ya + ta * p - za
        done = np.abs(g) < tol
        p_out[act[done]] = p[done]
        dp_out[act[done]] = dp[done]
        keep = ~done
        act, g, dp, ya, ta = act[keep], g[keep], dp[keep], ya[keep], ta[keep]
        lo[act] = np.where(g < 0, ya, lo[act])
        hi[act] = np.where(g > 0, ya, hi[act])
        dg = 1.0 + ta * dp
        with np.errstate(divide="ignore", invalid="ignore"):
            yn = ya - g / dg
        bad = ~((yn > lo[act]) & (yn < hi[act])) | ~(dg > 0)
        yn[bad] = 0.5 * (lo[act][bad] + hi[act][bad])
        y[act] = yn

    if act.size:
        glo = lo[act] + t[act] * phi(r[act], lo[act]) - z[act]
        ghi = hi[act] + t[act] * phi(r[act], hi[act]) - z[act]
        if np.any(glo > tol) or np.any(ghi < -tol):
            k = act[np.argmax(np.maximum(glo, -ghi))]
            raise InvariantViolation(
                f"characteristic bracket lost at r={r[k]:.6g}, z={z[k]:.6g}, t={t[k]:.6g}")
        for _ in range(BISECT_MAX):
            if act.size == 0:
                break
            mid = 0.5 * (lo[act] + hi[act])
            p = phi(r[act], mid)
            g = mid + t[act] * p - z[act]
            y[act] = mid
            width = hi[act] - lo[act]
            done = (np.abs(g) < tol) | (width <= 4 * np.spacing(np.abs(mid) + 1.0))
            fin = act[done]
            p_out[fin] = p[done]
            dp_out[fin] = dphi(r[fin], mid[done])
            lo[act] = np.where(g < 0, mid, lo[act])
            hi[act] = np.where(g > 0, mid, hi[act])
            act = act[~done]
        if act.size:
            k = act[0]
            raise InvariantViolation(
                f"bisection did not reach root_tol at r={r[k]:.6g}, z={z[k]:.6g}")
    return y, p_out, dp_out


def back_to_labels(sol: CharacteristicSolution, r, z, t, guard=None) -> FlowPoint:
    t = _check_time(sol, t, guard)
    r, z, t = np.broadcast_arrays(np.asarray(r, float), np.asarray(z, float), t)
    shape = r.shape
    y, p, dp = _solve_labels(sol, r, z, t)
    jac = 1.0 + t.ravel() * dp
    return FlowPoint(r, z, t, y.reshape(shape), jac.reshape(shape), p.reshape(shape),
                     dp.reshape(shape))


def characteristic_map(sol: CharacteristicSolution, r, y, t):
    """Forward map ``g_{r,t}(y) = y + t phi0(r, y)``."""
    return np.asarray(y) + np.asarray(t) * sol.phi0(r, y)


def eval_phi(sol, r, z, t, guard=None):
    return back_to_labels(sol, r, z, t, guard).phi0


def eval_omega(sol, r, z, t, guard=None):
    fp = back_to_labels(sol, r, z, t, guard)
    return sol.omega0(fp.r, fp.y) / fp.jac


def eval_gradients(sol, r, z, t, guard=None):
    """Closed-form ``(d_z phi, d_z h, d_r h, d_t h)`` at (r, z, t)."""
    fp = back_to_labels(sol, r, z, t, guard)
    dz_h = 1.0 / fp.jac
    dz_phi = fp.dphi0 * dz_h
    dr_h = -fp.t * sol.omega0(fp.r, fp.y) * dz_h
    dt_h = -fp.phi0 * dz_h
    return dz_phi, dz_h, dr_h, dt_h


def eval_dz_omega(sol, r, z, t, guard=None):
    """Closed-form d_z omega: ``(w0_y J - t w0 phi0_yy) / J^3``."""
    fp = back_to_labels(sol, r, z, t, guard)
    w0 = sol.omega0(fp.r, fp.y)
    w0_y = diff_z(sol.omega0)(fp.r, fp.y)
    phi_yy = diff_z(sol.dz_phi0)(fp.r, fp.y)
    J = fp.jac
    return (w0_y * J - fp.t * w0 * phi_yy) / J**3


def transported_point(sol, r0, z0, t):
    """Position at time t of the characteristic leaving (r0, z0)."""
    return r0, z0 + t * float(sol.phi0(r0, z0))


# -- diagnostics -------------------------------------------------------------

@dataclass(frozen=True)
class BKMRow:
    t: float
    sup_norm: float
    lower_bound: float
    integral_bound: float
    vacuous: bool


def sup_norm(sol, grid: Grid2D, t, guard=None) -> float:
    """Max |omega(., t)| over grid nodes and the images of the minimisers."""
    R, Z = grid.mesh()
    vals = np.abs(eval_omega(sol, R, Z, t, guard))
    best = float(vals.max())
    for m in sol.minimizers:
        rr, zz = transported_point(sol, m.r, m.z, t)
        best = max(best, float(np.abs(eval_omega(sol, rr, zz, t, guard))))
    return best


def bkm_diagnostic(sol: CharacteristicSolution, t_samples, grid: Grid2D, guard=None):
    """Sup-norm samples against the pointwise and integrated lower bounds."""
    a = abs(sol.omega0_at_argmin)
    # omega0 vanishing at the steepest point (up to roundoff) makes both bounds trivial
    vacuous = a <= sol.omega0.tail_tol
    rows = []
    for t in np.asarray(t_samples, dtype=float):
        _check_time(sol, t, guard)
        s = sup_norm(sol, grid, t, guard)
        if sol.blows_up:
            lower = a / (1.0 - t / sol.t_max)
            integral = a * sol.t_max * math.log(sol.t_max / (sol.t_max - t))
        else:
            lower, integral = a, a * t
        rows.append(BKMRow(float(t), s, lower, integral, vacuous))
    return rows


def fit_blowup_constant(rows, t_max) -> float:
    """Least-squares C in ``sup ~ C / (1 - t/T_max)``."""
    s = np.array([1.0 - r.t / t_max for r in rows])
    v = np.array([r.sup_norm for r in rows])
    return float(np.sum(v / s) / np.sum(1.0 / s**2))
