"""``vortex-shock`` command-line front end.

    vortex-shock <blowup|exact|compare|eps-sweep|bkm> --scenario PATH [--out DIR] [--threads N]

Every command writes ``manifest.json`` (schema in ``schemas/manifest.schema.json``)
and, when ``json`` is among the output formats, ``report.json``.  Exit codes:
0 success, 2 validation error, 3 numerical failure; failures print a JSON error
object on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .characteristics import (BlowupHorizonError, InvariantViolation, bkm_diagnostic,
                              build_solution, eval_omega, eval_phi, fit_blowup_constant)
from .direct_solver import NumericalError, run
from .fields import FieldError, QuadratureError, sample
from .perturbation import (EllipticProblem, EpsilonError, divergence_residual,
                           reconstruct_velocity, run_perturbed)
from .presets import PresetError, make_preset
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
MANIFEST_SCHEMA = "vortex-shock/manifest/1"
COMMANDS = ("blowup", "exact", "compare", "eps-sweep", "bkm")
BKM_SAMPLES = 10

VALIDATION_ERRORS = (ScenarioError, PresetError, FieldError, EpsilonError, BlowupHorizonError)
NUMERICAL_ERRORS = (NumericalError, QuadratureError, InvariantViolation)


# -- serialisation -----------------------------------------------------------

def _plain(obj):
    """Convert to JSON-ready builtins; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(grid, values) -> str:
    """``r,z,value`` rows in scientific notation with 17 significant digits."""
    R, Z = grid.mesh()
    buf = io.StringIO()
    buf.write("r,z,value\n")
    np.savetxt(buf, np.column_stack([R.ravel(), Z.ravel(), np.asarray(values).ravel()]),
               fmt="%.17e", delimiter=",")
    return buf.getvalue()


# -- commands ----------------------------------------------------------------

class Run:
    """Shared context for one command invocation."""

    def __init__(self, scenario, out_dir, threads):
        self.sc = scenario
        self.out = Path(out_dir)
        self.threads = threads
        self.omega0 = make_preset(scenario.initial_data.preset, scenario.initial_data.params)
        s = scenario.solver
        self.sol = build_solution(self.omega0, quad_tol=s.quad_tol, root_tol=s.root_tol,
                                  guard=s.guard)
        self.files = []
        self.grids = []
        self.times = []
        self.lines = []

    def horizon(self):
        return self.sc.times(self.sol.t_max)

    def map(self, fn, items):
        items = list(items)
        if self.threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    def write(self, name, text, kind, **meta):
        atomic_write(self.out / name, text)
        self.files.append(dict(path=name, kind=kind, **meta))


def cmd_blowup(ctx: Run) -> dict:
    sol = ctx.sol
    report = {
        "t_max": sol.t_max,
        "global": not sol.blows_up,
        "inf_dz_phi0": sol.inf_dz_phi0,
        "argmin": list(sol.argmin) if sol.argmin is not None else None,
        "omega0_at_argmin": sol.omega0_at_argmin,
        "minimizers": [{"r": m.r, "z": m.z, "dz_phi0": m.value, "omega0": m.omega0}
                       for m in sol.minimizers],
        "bracket_width": sol.bracket_width,
    }
    if sol.blows_up:
        ctx.lines.append(f"T_max = {sol.t_max:.15g}")
        ctx.lines.append(f"argmin (r, z) = ({sol.argmin[0]:.10g}, {sol.argmin[1]:.10g})")
        ctx.lines.append(f"inf d_z phi0 = {sol.inf_dz_phi0:.15g}")
        ctx.lines.append(f"omega0 at argmin = {sol.omega0_at_argmin:.15g}")
    else:
        ctx.lines.append("T_max = inf (global solution: d_z phi0 >= 0 everywhere)")
    return report


def cmd_exact(ctx: Run) -> dict:
    grid = ctx.sc.grid.grid()
    _, times = ctx.horizon()
    ctx.grids.append(grid)
    ctx.times = times
    R, Z = grid.mesh()
    guard = ctx.sc.solver.guard

    def evaluate(t):
        if t == 0.0:
            return sample(ctx.omega0, grid).values, ctx.sol.phi0(R, Z)
        return eval_omega(ctx.sol, R, Z, t, guard), eval_phi(ctx.sol, R, Z, t, guard)

    fields = ctx.map(evaluate, times)
    snaps = []
    for k, (t, (w, p)) in enumerate(zip(times, fields)):
        entry = {"index": k, "t": t, "sup_abs_omega": float(np.max(np.abs(w))),
                 "sup_abs_phi": float(np.max(np.abs(p)))}
        if "csv" in ctx.sc.output.formats:
            for q, v in (("omega", w), ("phi", p)):
                name = f"{q}_{k:04d}.csv"
                ctx.write(name, csv_text(grid, v), q, t=t)
                entry[q] = name
        snaps.append(entry)
        ctx.lines.append(f"t = {t:.10g}  sup|omega| = {entry['sup_abs_omega']:.10g}")
    return {"grid": grid.as_dict(), "snapshots": snaps}


def _order(coarse, fine, ratio):
    if coarse is None or coarse <= 0 or fine <= 0:
        return None
    return math.log(coarse / fine) / math.log(ratio)


def cmd_compare(ctx: Run) -> dict:
    gspec = ctx.sc.grid
    levels = list(gspec.resolutions) or [gspec.nz - 1]
    grids = [gspec.grid_for(n) for n in levels]
    horizon, times = ctx.horizon()
    ctx.grids.extend(grids)
    ctx.times = times
    guard = ctx.sc.solver.guard

    def one(grid):
        traj = run(ctx.omega0, grid, horizon, cfl=ctx.sc.solver.cfl, snapshot_times=times)
        R, Z = grid.mesh()
        out = []
        for st in traj.snapshots:
            if st.t not in times:
                continue
            exact = eval_omega(ctx.sol, R, Z, st.t, guard) if st.t > 0 else \
                sample(ctx.omega0, grid).values
            err = np.abs(st.omega.values - exact)
            out.append((st.t, float(err.max()), float(err.sum() * grid.dr * grid.dz)))
        return out, traj.mass_drift()

    results = ctx.map(one, grids)
    rows = []
    prev = {}
    for n, grid, (errs, drift) in zip(levels, grids, results):
        for t, linf, l1 in errs:
            pl = prev.get(t)
            ratio = n / pl[0] if pl else None
            rows.append({
                "n": n, "nr": grid.nr, "nz": grid.nz, "t": t, "linf": linf, "l1": l1,
                "order_linf": _order(pl[1], linf, ratio) if pl else None,
                "order_l1": _order(pl[2], l1, ratio) if pl else None,
                "mass_drift": drift,
            })
            prev[t] = (n, linf, l1)
    ctx.lines.append(f"{'n':>6} {'t':>12} {'Linf':>12} {'L1':>12} {'order':>7}")
    for row in rows:
        o = row["order_linf"]
        ctx.lines.append(f"{row['n']:>6} {row['t']:>12.6g} {row['linf']:>12.4e} "
                         f"{row['l1']:>12.4e} {'-' if o is None else f'{o:7.3f}':>7}")
    return {"rows": rows}


EPS_NOTE = ("exploratory: distances measure how far each perturbed run sits from the "
            "eps = 0 solution on this grid; they are evidence, not a convergence proof")


def cmd_eps_sweep(ctx: Run) -> dict:
    grid = ctx.sc.grid.grid()
    horizon, times = ctx.horizon()
    ctx.grids.append(grid)
    ctx.times = times
    guard = ctx.sc.solver.guard
    R, Z = grid.mesh()
    exact = {t: (eval_omega(ctx.sol, R, Z, t, guard) if t > 0 else
                 sample(ctx.omega0, grid).values) for t in times}

    def one(eps):
        problem = EllipticProblem.build(grid, eps)
        states = run_perturbed(ctx.omega0, grid, eps, horizon, cfl=ctx.sc.solver.cfl,
                               snapshot_times=times, problem=problem)
        out = []
        for st in states:
            if st.t not in exact:
                continue
            u_r, u_z = reconstruct_velocity(st)
            out.append({"eps": eps, "t": st.t,
                        "distance": float(np.max(np.abs(st.omega.values - exact[st.t]))),
                        "divergence_residual": divergence_residual(u_r, u_z, eps)})
        return out

    rows = [r for rs in ctx.map(one, ctx.sc.solver.eps) for r in rs]
    ctx.lines.append("# " + EPS_NOTE)
    ctx.lines.append(f"{'eps':>12} {'t':>12} {'distance':>12} {'div resid':>12}")
    for r in rows:
        ctx.lines.append(f"{r['eps']:>12.6g} {r['t']:>12.6g} {r['distance']:>12.4e} "
                         f"{r['divergence_residual']:>12.4e}")
    return {"exploratory": True, "note": EPS_NOTE, "grid": grid.as_dict(), "rows": rows}


def cmd_bkm(ctx: Run) -> dict:
    grid = ctx.sc.grid.grid()
    horizon, times = ctx.horizon()
    if not ctx.sc.time.snapshots:
        times = [float(t) for t in np.linspace(0.0, horizon, BKM_SAMPLES)]
    ctx.grids.append(grid)
    ctx.times = times
    rows = bkm_diagnostic(ctx.sol, times, grid, ctx.sc.solver.guard)
    a = abs(ctx.sol.omega0_at_argmin)
    vacuous = bool(rows[0].vacuous) if rows else a == 0.0
    fit = None
    if ctx.sol.blows_up and not vacuous:
        fit = fit_blowup_constant(rows, ctx.sol.t_max)
    ctx.lines.append(f"|omega0(argmin)| = {a:.10g}" + ("  (bound vacuous)" if vacuous else ""))
    ctx.lines.append(f"{'t':>12} {'sup|omega|':>14} {'pointwise':>14} {'integral':>14}")
    for r in rows:
        ctx.lines.append(f"{r.t:>12.6g} {r.sup_norm:>14.8g} {r.lower_bound:>14.8g} "
                         f"{r.integral_bound:>14.8g}")
    if fit is not None:
        ctx.lines.append(f"fitted C in sup ~ C/(1 - t/T_max): {fit:.10g}")
    return {
        "omega0_at_argmin": a,
        "bound_vacuous": vacuous,
        "fitted_constant": fit,
        "grid": grid.as_dict(),
        "rows": [{"t": r.t, "sup_norm": r.sup_norm, "pointwise_bound": r.lower_bound,
                  "integral_bound": r.integral_bound, "bound_holds":
                  bool(r.sup_norm >= r.lower_bound - 1e-6)} for r in rows],
    }


HANDLERS = {"blowup": cmd_blowup, "exact": cmd_exact, "compare": cmd_compare,
            "eps-sweep": cmd_eps_sweep, "bkm": cmd_bkm}


def manifest(ctx: Run, command: str, report_file) -> dict:
    sc = ctx.sc
    return {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "scenario": {"name": sc.name, "path": sc.path, "sha256": sc.sha256},
        "package": {"name": "vortex-shock", "version": __version__,
                    "backend": kernels.BACKEND},
        "initial_data": {"preset": sc.initial_data.preset, "params": sc.initial_data.params},
        "t_max": ctx.sol.t_max,
        "global": not ctx.sol.blows_up,
        "grids": [g.as_dict() for g in ctx.grids],
        "times": list(ctx.times),
        "files": ctx.files,
        "report": report_file,
    }


# -- entry point -------------------------------------------------------------

def _threads(arg):
    env = os.environ.get("VORTEX_SHOCK_THREADS")
    raw = env if env not in (None, "") else arg
    source = "VORTEX_SHOCK_THREADS" if env not in (None, "") else "--threads"
    try:
        n = int(raw)
    except (TypeError, ValueError):
        raise ScenarioError(f"expected a positive integer, got {raw!r}", source) from None
    if n < 1:
        raise ScenarioError(f"expected a positive integer, got {n}", source)
    return n


def error_object(exc, code) -> dict:
    err = {"exit_code": code,
           "kind": "validation_error" if code == EXIT_VALIDATION else "numerical_failure",
           "type": type(exc).__name__, "message": str(exc)}
    for attr in ("key", "line", "node", "t", "t_max", "dt", "dt_max"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    return {"error": err}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="vortex-shock", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", required=True, help="YAML scenario file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", default="1",
                   help="worker threads; VORTEX_SHOCK_THREADS overrides")
    return p


def execute(command, scenario_path, out=None, threads="1"):
    """Run one command; returns (report, manifest, text lines)."""
    sc = load_scenario(scenario_path)
    n = _threads(threads)
    ctx = Run(sc, out or sc.output.dir, n)
    report = HANDLERS[command](ctx)
    report_file = None
    if "json" in sc.output.formats:
        report_file = "report.json"
        atomic_write(ctx.out / report_file,
                     dumps({"command": command, "scenario": sc.name, **report}))
    man = manifest(ctx, command, report_file)
    atomic_write(ctx.out / "manifest.json", dumps(man))
    return report, man, ctx.lines


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        obj = error_object(exc, EXIT_VALIDATION)
        obj["error"]["usage"] = parser.format_usage().strip()
        sys.stderr.write(dumps(obj))
        return EXIT_VALIDATION
    except SystemExit as exc:      # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        _, _, lines = execute(args.command, args.scenario, args.out, args.threads)
    except VALIDATION_ERRORS as exc:
        sys.stderr.write(dumps(error_object(exc, EXIT_VALIDATION)))
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        sys.stderr.write(dumps(error_object(exc, EXIT_NUMERICAL)))
        return EXIT_NUMERICAL
    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
