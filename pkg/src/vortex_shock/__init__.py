"""Shock formation in the infinite-dimensional limit of axisymmetric Euler.

The limit model is Burgers' equation for the vorticity potential
``phi = d_r^{-1} omega``; its finite-dimensional perturbation adds ``eps Q_eps``.
"""

from .characteristics import (
    BKMRow,
    BlowupHorizonError,
    CharacteristicSolution,
    back_to_labels,
    bkm_diagnostic,
    build_solution,
    characteristic_map,
    eval_dz_omega,
    eval_gradients,
    eval_omega,
    eval_phi,
    fit_blowup_constant,
    sup_norm,
)
from .direct_solver import NumericalError, SolverState, Trajectory, run, step
from .fields import Grid2D, GriddedField, ScalarField, antiderivative_r, sample, zero_field
from .perturbation import (
    EllipticProblem,
    Epsilon,
    PerturbedState,
    assemble_Q,
    divergence_residual,
    reconstruct_velocity,
    run_perturbed,
    solve_sigma,
    step_perturbed,
    velocity_from_stream,
)
from .presets import PRESETS, make_preset
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario

__version__ = "0.1.0"
