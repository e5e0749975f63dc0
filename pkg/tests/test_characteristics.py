import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from vortex_shock.characteristics import (
    BKMRow, BlowupHorizonError, back_to_labels, bkm_diagnostic, build_solution,
    characteristic_map, eval_dz_omega, eval_gradients, eval_omega, eval_phi,
    fit_blowup_constant, sup_norm, transported_point,
)
from vortex_shock.fields import Grid2D, zero_field
from vortex_shock.presets import custom_sum, gaussian_ring, offset_ring


def ring_omega_oracle(r, z, t):
    """omega at (r, z, t) for 2 r z exp(-r^2 - z^2), labels found by brentq."""
    g = lambda y: y - t * y * math.exp(-r * r - y * y) - z
    y = brentq(g, -30.0, 30.0, xtol=1e-15, rtol=1e-15)
    jac = 1 - t * (1 - 2 * y * y) * math.exp(-r * r - y * y)
    return 2 * r * y * math.exp(-r * r - y * y) / jac


def test_ring_blowup_time_and_argmin(ring_sol):
    assert ring_sol.t_max == pytest.approx(1.0, abs=1e-9)
    assert math.hypot(*ring_sol.argmin) < 1e-6
    assert abs(ring_sol.omega0_at_argmin) < 1e-12


@pytest.mark.parametrize("amp,width", [(2.0, 1.0), (0.5, 1.0), (1.0, 0.5), (3.0, 2.0)])
def test_blowup_time_scales_with_amplitude(amp, width):
    sol = build_solution(gaussian_ring(amp, width))
    assert sol.t_max == pytest.approx(1.0 / amp, rel=1e-9)


def test_offset_ring_steepest_point(offset_sol):
    assert offset_sol.t_max == pytest.approx(math.e, rel=1e-9)
    assert offset_sol.argmin == pytest.approx((1.0, 1.0), abs=1e-6)
    assert offset_sol.omega0_at_argmin == pytest.approx(1.0 / math.e, rel=1e-9)


def test_zero_data_is_global():
    sol = build_solution(zero_field())
    assert not sol.blows_up and sol.t_max == math.inf
    assert np.all(eval_omega(sol, np.ones(3), np.zeros(3), 100.0) == 0.0)


def test_symmetric_data_reports_every_minimiser():
    f = custom_sum([{"a": 1, "b": 1, "z_center": -3.0}, {"a": 1, "b": 1, "z_center": 3.0}])
    sol = build_solution(f)
    zs = sorted(m.z for m in sol.minimizers)
    assert len(zs) == 2
    assert zs[0] == pytest.approx(-3.0, abs=1e-5) and zs[1] == pytest.approx(3.0, abs=1e-5)


def test_time_zero_is_identity(ring_sol, ring, rng):
    r = rng.uniform(0, 3, 50)
    z = rng.uniform(-3, 3, 50)
    fp = back_to_labels(ring_sol, r, z, 0.0)
    assert np.array_equal(fp.y, z)
    assert np.max(np.abs(eval_omega(ring_sol, r, z, 0.0) - ring(r, z))) < 1e-15


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-4.0, 4.0), st.floats(0.0, 0.99))
def test_labels_invert_the_flow(ring_sol, r, z, t):
    fp = back_to_labels(ring_sol, r, z, t)
    assert abs(float(characteristic_map(ring_sol, r, fp.y, t)) - z) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.5), st.floats(-3.0, 3.0), st.floats(0.0, 0.99))
def test_omega_matches_brentq_oracle(ring_sol, r, z, t):
    assert float(eval_omega(ring_sol, r, z, t)) == pytest.approx(
        ring_omega_oracle(r, z, t), abs=1e-9)


def test_potential_is_constant_along_characteristics(offset_sol, rng):
    r = rng.uniform(0, 3, 100)
    y = rng.uniform(-3, 4, 100)
    t = 0.8 * offset_sol.t_max
    z = characteristic_map(offset_sol, r, y, t)
    assert np.max(np.abs(eval_phi(offset_sol, r, z, t) - offset_sol.phi0(r, y))) < 1e-9


def test_gradient_closed_forms_against_differences(offset_sol, rng):
    r = rng.uniform(0.2, 2.5, 40)
    z = rng.uniform(-2, 3, 40)
    t = 0.5 * offset_sol.t_max
    dz_phi, dz_h, dr_h, dt_h = eval_gradients(offset_sol, r, z, t)
    h = 1e-5
    lab = lambda rr, zz, tt: back_to_labels(offset_sol, rr, zz, tt).y
    assert np.max(np.abs(dz_h - (lab(r, z + h, t) - lab(r, z - h, t)) / (2 * h))) < 1e-6
    assert np.max(np.abs(dr_h - (lab(r + h, z, t) - lab(r - h, z, t)) / (2 * h))) < 1e-6
    assert np.max(np.abs(dt_h - (lab(r, z, t + h) - lab(r, z, t - h)) / (2 * h))) < 1e-6
    ph = lambda zz: eval_phi(offset_sol, r, zz, t)
    assert np.max(np.abs(dz_phi - (ph(z + h) - ph(z - h)) / (2 * h))) < 1e-6
    w = lambda zz: eval_omega(offset_sol, r, zz, t)
    assert np.max(np.abs(eval_dz_omega(offset_sol, r, z, t) - (w(z + h) - w(z - h)) / (2 * h))) < 1e-5


def test_vorticity_stays_bounded_on_coarse_grid(ring_sol):
    g = Grid2D(64, 128, 4.0, -4.0, 4.0)
    for t in (0.5, 0.9, 0.99, 0.999):
        assert sup_norm(ring_sol, g, t, guard=1e-6) <= 1.0 + 1e-9


def test_guard_and_horizon(ring_sol):
    with pytest.raises(BlowupHorizonError, match="guarded horizon"):
        eval_omega(ring_sol, 0.5, 0.0, 0.9995)
    eval_omega(ring_sol, 0.5, 0.0, 0.9995, guard=1e-4)
    with pytest.raises(BlowupHorizonError):
        eval_omega(ring_sol, 0.5, 0.0, 1.0, guard=1e-12)
    with pytest.raises(ValueError):
        eval_omega(ring_sol, 0.5, 0.0, -0.1)


def test_bkm_rows(offset_sol, ring_sol):
    g = Grid2D(48, 96, 4.0, -3.0, 5.0)
    T = offset_sol.t_max
    rows = bkm_diagnostic(offset_sol, [0.0, 0.5 * T, 0.9 * T], g)
    assert rows[0].integral_bound == 0.0
    assert all(r.sup_norm >= r.lower_bound - 1e-9 for r in rows)
    assert not any(r.vacuous for r in rows)
    vac = bkm_diagnostic(ring_sol, [0.0, 0.5], g)
    assert all(r.vacuous for r in vac)


def test_transported_minimiser_carries_the_bound(offset_sol):
    m = offset_sol.minimizers[0]
    t = 0.95 * offset_sol.t_max
    rr, zz = transported_point(offset_sol, m.r, m.z, t)
    assert float(eval_omega(offset_sol, rr, zz, t)) == pytest.approx(m.omega0 / (1 - t / offset_sol.t_max), rel=1e-6)


def test_fit_recovers_synthetic_constant():
    rows = [BKMRow(t, 0.3 / (1 - t / 2.0), 0, 0, False) for t in np.linspace(0, 1.9, 10)]
    assert fit_blowup_constant(rows, 2.0) == pytest.approx(0.3, rel=1e-14)
