import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortex_shock import perturbation as pt
from vortex_shock.characteristics import eval_omega
from vortex_shock.fields import Grid2D, GriddedField, sample, zero_field


def mms(eps, n):
    """Max error for sigma = r exp(-r^2 - z^2) on [0,5] x [-5,5]."""
    g = Grid2D(n, 2 * n + 1, 5.0, -5.0, 5.0)
    R, Z = g.mesh()
    E = np.exp(-R**2 - Z**2)
    exact = R * E
    rhs = (2 * R - eps * (4 * R**3 + 4 * R * Z**2 - 8 * R)) * E
    rhs[:, 0] = rhs[:, -1] = 0.0
    sol = pt.EllipticProblem.build(g, eps).solve(rhs)
    return np.max(np.abs(sol - exact))


def q_oracle(w, p, s, r, dr, dz, eps):
    """Q_eps by explicit loops with the documented ghost values."""
    nr, nz = w.shape
    out = np.empty_like(w)

    def at(f, j, i, parity):
        if j < 0:
            return parity * f[0, i]
        if j == nr:
            return 3 * f[nr - 1, i] - 3 * f[nr - 2, i] + f[nr - 3, i]
        if i < 0:
            return 3 * f[j, 0] - 3 * f[j, 1] + f[j, 2]
        if i == nz:
            return 3 * f[j, nz - 1] - 3 * f[j, nz - 2] + f[j, nz - 3]
        return f[j, i]

    for j in range(nr):
        for i in range(nz):
            wr = (at(w, j + 1, i, -1) - at(w, j - 1, i, -1)) / (2 * dr)
            wz = (at(w, j, i + 1, 0) - at(w, j, i - 1, 0)) / (2 * dz)
            pz = (at(p, j, i + 1, 0) - at(p, j, i - 1, 0)) / (2 * dz)
            sr = (at(s, j + 1, i, -1) - at(s, j - 1, i, -1)) / (2 * dr)
            sz = (at(s, j, i + 1, 0) - at(s, j, i - 1, 0)) / (2 * dz)
            out[j, i] = ((-r[j] * pz + eps * sz) * wr
                         + (p[j, i] + r[j] * w[j, i] - s[j, i] / r[j] - eps * sr) * wz
                         - sz / r[j] * w[j, i])
    return out


@settings(max_examples=50)
@given(st.floats(1e-6, 1.0))
def test_epsilon_accepts_unit_interval(e):
    assert pt.Epsilon(e).non_integer


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5, float("nan"), float("inf")])
def test_epsilon_rejects(bad):
    with pytest.raises(pt.EpsilonError):
        pt.Epsilon(bad)


def test_epsilon_from_dimension():
    e = pt.Epsilon.from_dimension(10)
    assert e.eps == 0.125 and e.d == 10 and not e.non_integer
    with pytest.raises(pt.EpsilonError):
        pt.Epsilon(0.3, d=5)
    with pytest.raises(pt.EpsilonError):
        pt.Epsilon.from_dimension(2)


@pytest.mark.parametrize("eps", [1.0, 0.125])
def test_manufactured_solution_second_order(eps):
    e = [mms(eps, n) for n in (16, 32, 64)]
    orders = np.log2(np.array(e[:-1]) / np.array(e[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.25), orders


def test_elliptic_consistency(ring):
    g = Grid2D(32, 65, 4.5, -4.5, 4.5)
    prob = pt.EllipticProblem.build(g, 0.25)
    st0 = pt.PerturbedState.from_omega(prob, sample(ring, g).values)
    b = pt.sigma_rhs(g, st0.phi.values)
    assert prob.scaled_residual(st0.sigma.values, b) < pt.SOLVER_TOL
    assert np.max(np.abs(prob.apply(st0.sigma.values) - b)) < 1e-8


def test_elliptic_solve_failure_is_reported(monkeypatch):
    g = Grid2D(8, 9, 1.0, -1.0, 1.0)
    prob = pt.EllipticProblem.build(g, 0.5)

    class Broken:
        def solve(self, b):
            return np.full_like(b, 1e3)

    object.__setattr__(prob, "lu", Broken())
    with pytest.raises(pt.EllipticError, match="residual"):
        prob.solve(np.ones(g.shape[0] * g.shape[1]))


def test_stream_function_identity_second_order(ring):
    """Discrete -Delta_eps applied to -r phi + eps sigma gives back omega.

    The residual is ``dr^2 phi_rr / (2 r)``: second order for r bounded away from
    the axis, first order in the cells next to it.
    """
    errs, far = [], []
    for n in (32, 64, 128):
        g = Grid2D(n, 2 * n + 1, 4.5, -4.5, 4.5)
        prob = pt.EllipticProblem.build(g, 0.125)
        st0 = pt.PerturbedState.from_omega(prob, sample(ring, g).values)
        psi = -g.r_nodes[:, None] * st0.phi.values + 0.125 * st0.sigma.values
        err = np.abs(prob.apply(psi) - st0.omega.values)[:, 1:-1]
        errs.append(err.max())
        far.append(err[g.r_nodes >= 0.5].max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    far_orders = np.log2(np.array(far[:-1]) / np.array(far[1:]))
    assert np.all(orders > 0.9), orders
    assert np.all(far_orders > 1.8), far_orders


def test_q_matches_loop_oracle(rng):
    nr, nz = 6, 9
    w, p, s = (rng.standard_normal((nr, nz)) for _ in range(3))
    r = (np.arange(nr) + 0.5) * 0.3
    got = pt.kernels.q_operator(w, p, s, r, 0.3, 0.2, 0.4)
    assert np.max(np.abs(got - q_oracle(w, p, s, r, 0.3, 0.2, 0.4))) < 1e-12


def test_zero_state():
    g = Grid2D(16, 33, 4.0, -4.0, 4.0)
    states = pt.run_perturbed(zero_field(), g, 0.125, 0.5)
    assert np.all(states[-1].omega.values == 0.0)
    u_r, u_z = pt.reconstruct_velocity(states[-1])
    assert u_r.max_abs() == 0.0 and u_z.max_abs() == 0.0
    assert pt.assemble_Q(states[-1]).max_abs() == 0.0


def test_velocity_formal_limit(ring):
    g = Grid2D(32, 65, 4.5, -4.5, 4.5)
    w = sample(ring, g).values
    dev = []
    for e in (1e-2, 1e-3, 1e-4):
        s = pt.PerturbedState.from_omega(pt.EllipticProblem.build(g, e), w)
        u_r, u_z = pt.reconstruct_velocity(s)
        dev.append((u_r.max_abs(), np.max(np.abs(u_z.values - s.phi.values))))
    dev = np.array(dev)
    assert np.all(dev[1:] < 0.2 * dev[:-1])
    assert dev[-1].max() < 1e-3


def test_stream_oracle_divergence_free():
    g = Grid2D(64, 129, 4.0, -4.0, 4.0)
    R, Z = g.mesh()
    psi = GriddedField(g, R**2 * Z * np.exp(-R**2 - Z**2))
    u_r, u_z = pt.velocity_from_stream(psi, 0.2)
    assert pt.divergence_residual(u_r, u_z, 0.2) < 1e-12
    assert pt.divergence_residual(GriddedField(g, 0 * R), GriddedField(g, 0 * R), 0.2) == 0.0


def test_rk3_local_error_order(ring):
    g = Grid2D(32, 65, 4.5, -4.5, 4.5)
    prob = pt.EllipticProblem.build(g, 0.125)
    s0 = pt.PerturbedState.from_omega(prob, sample(ring, g).values)
    dt0 = pt.max_dt(s0, 0.4)
    diffs = []
    for dt in (dt0, dt0 / 2):
        one = pt.step_perturbed(prob, s0, dt)
        half = pt.step_perturbed(prob, pt.step_perturbed(prob, s0, dt / 2), dt / 2)
        diffs.append(np.max(np.abs(one.omega.values - half.omega.values)))
    assert diffs[0] / diffs[1] > 2**3 * 0.9


def test_cfl_violation(ring):
    g = Grid2D(16, 33, 4.5, -4.5, 4.5)
    prob = pt.EllipticProblem.build(g, 0.125)
    s0 = pt.PerturbedState.from_omega(prob, sample(ring, g).values)
    with pytest.raises(pt.CFLError):
        pt.step_perturbed(prob, s0, 3 * pt.max_dt(s0, 0.4))


def test_eps_continuity_guard_rail(ring, ring_sol):
    g = Grid2D(64, 129, 4.5, -4.5, 4.5)
    R, Z = g.mesh()
    exact = eval_omega(ring_sol, R, Z, 0.3)
    d = [np.max(np.abs(pt.run_perturbed(ring, g, e, 0.3)[-1].omega.values - exact))
         for e in (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)]
    assert all(b <= 1.1 * a for a, b in zip(d, d[1:])), d
