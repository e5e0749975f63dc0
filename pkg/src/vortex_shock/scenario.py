"""Declarative experiment scenarios (YAML) with strict validation.

A scenario file looks like::

    name: ring-blowup
    initial_data:
      preset: gaussian_ring
      params: {amplitude: 1.0}
    grid: {r_max: 4.0, z_min: -4.5, z_max: 4.5, nr: 128, nz: 257,
           resolutions: [64, 128, 256]}
    time: {horizon: 0.5, units: fraction, snapshots: [0.0, 0.25]}
    solver: {cfl: 0.4, eps: [0.125, 0.0625]}
    output: {dir: out, formats: [csv, json]}

Unknown keys anywhere are rejected.  Errors name the offending key path and,
when the value came from a file, its line.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .characteristics import GUARD, ROOT_TOL
from .fields import QUAD_TOL, Grid2D
from .presets import PRESETS

MAX_NODES = 1 << 22          # per grid; keeps a sparse LU well under a few GB
UNITS = ("fraction", "absolute")
FORMATS = ("csv", "json")


class ScenarioError(ValueError):
    def __init__(self, message, key: Optional[str] = None, line: Optional[int] = None):
        self.key, self.line = key, line
        where = ""
        if key:
            where += f"{key}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)
        self.detail = message


@dataclass(frozen=True)
class InitialData:
    preset: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GridSpec:
    r_max: float = 4.0
    z_min: float = -4.5
    z_max: float = 4.5
    nr: int = 64
    nz: int = 129
    resolutions: tuple = ()

    def grid(self) -> Grid2D:
        return Grid2D(self.nr, self.nz, self.r_max, self.z_min, self.z_max)

    def grid_for(self, n_z_cells: int) -> Grid2D:
        """Grid with ``n`` axial cells and radial spacing matched to it."""
        nr = max(4, round(n_z_cells * self.r_max / (self.z_max - self.z_min)))
        return Grid2D(nr, n_z_cells + 1, self.r_max, self.z_min, self.z_max)


@dataclass(frozen=True)
class TimeSpec:
    horizon: float = 0.5
    units: str = "fraction"
    snapshots: tuple = ()


@dataclass(frozen=True)
class SolverSpec:
    cfl: float = 0.4
    quad_tol: float = QUAD_TOL
    root_tol: float = ROOT_TOL
    guard: float = GUARD
    eps: tuple = (0.125, 0.0625, 0.03125, 0.015625)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    formats: tuple = FORMATS


@dataclass(frozen=True)
class Scenario:
    name: str
    initial_data: InitialData
    grid: GridSpec = GridSpec()
    time: TimeSpec = TimeSpec()
    solver: SolverSpec = SolverSpec()
    output: OutputSpec = OutputSpec()
    sha256: str = ""
    path: Optional[str] = None

    def times(self, t_max: float):
        """Absolute (horizon, snapshots) given the blowup time."""
        t = self.time
        if t.units == "absolute":
            scale = 1.0
        elif math.isfinite(t_max):
            scale = t_max
        else:
            raise ScenarioError("a fraction of T_max is undefined for data that never "
                                "blows up; use units: absolute", "time.units")
        horizon = t.horizon * scale
        snaps = sorted(set([s * scale for s in t.snapshots] + [horizon]))
        return horizon, snaps


# -- YAML with line numbers --------------------------------------------------

class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 needs a dot in floats; also accept 1e-6 as YAML 1.2 does
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float", re.compile(r"^[-+]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)[eE][-+]?[0-9]+$"),
    list("-+0123456789."))

_SCALARS = _Loader("")   # used only for its scalar constructors


def _to_python(node, path, lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            sub = f"{path}.{key}" if path else key
            if key in out:
                raise ScenarioError("duplicate key", sub, k.start_mark.line + 1)
            out[key] = _to_python(v, sub, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return _SCALARS.construct_object(node)


def _load_tree(text: str):
    try:
        node = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                            line=mark.line + 1 if mark else None) from exc
    if node is None:
        raise ScenarioError("scenario file is empty")
    lines = {}
    return _to_python(node, "", lines), lines


# -- validation --------------------------------------------------------------

class _Ctx:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, msg, key):
        raise ScenarioError(msg, key, self.lines.get(key))

    def section(self, tree, key, allowed, required=()):
        val = tree.get(key, {}) if key else tree
        if not isinstance(val, dict):
            self.fail("expected a mapping", key)
        for k in val:
            if k not in allowed:
                self.fail(f"unknown key (allowed: {', '.join(allowed)})",
                          f"{key}.{k}" if key else k)
        for k in required:
            if k not in val:
                self.fail("missing required key", f"{key}.{k}" if key else k)
        return val

    def number(self, sec, name, key, default, **bounds):
        return self.value(sec.get(name, default), f"{key}.{name}", **bounds)

    def value(self, v, path, lo=None, hi=None, lo_open=False, hi_open=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(f"expected a finite number, got {v!r}", path)
        v = float(v)
        if lo is not None and (v < lo or (lo_open and v == lo)):
            self.fail(f"must be {'>' if lo_open else '>='} {lo:g}, got {v:g}", path)
        if hi is not None and (v > hi or (hi_open and v == hi)):
            self.fail(f"must be {'<' if hi_open else '<='} {hi:g}, got {v:g}", path)
        return v

    def integer(self, sec, name, key, default, lo):
        path = f"{key}.{name}"
        v = sec.get(name, default)
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"expected an integer, got {v!r}", path)
        if v < lo:
            self.fail(f"must be >= {lo}, got {v}", path)
        return v

    def seq(self, sec, name, key, default):
        v = sec.get(name, default)
        if not isinstance(v, (list, tuple)):
            self.fail("expected a list", f"{key}.{name}")
        return list(v)


def parse_scenario(text: str, path: Optional[str] = None) -> Scenario:
    raw = text.encode() if isinstance(text, str) else text
    tree, lines = _load_tree(raw.decode())
    c = _Ctx(lines)
    if not isinstance(tree, dict):
        raise ScenarioError("top level must be a mapping")
    c.section(tree, "", ("name", "initial_data", "grid", "time", "solver", "output"),
              required=("name", "initial_data"))
    name = tree["name"]
    if not isinstance(name, str) or not name:
        c.fail("expected a non-empty string", "name")

    init = c.section(tree, "initial_data", ("preset", "params"), required=("preset",))
    if init["preset"] not in PRESETS:
        c.fail(f"unknown preset {init['preset']!r} (choose {', '.join(PRESETS)})",
               "initial_data.preset")
    params = init.get("params", {}) or {}
    if not isinstance(params, dict):
        c.fail("expected a mapping", "initial_data.params")

    g = c.section(tree, "grid", ("r_max", "z_min", "z_max", "nr", "nz", "resolutions"))
    d = GridSpec()
    r_max = c.number(g, "r_max", "grid", d.r_max, lo=0, lo_open=True)
    z_min = c.number(g, "z_min", "grid", d.z_min)
    z_max = c.number(g, "z_max", "grid", d.z_max)
    if z_max <= z_min:
        c.fail("z_max must exceed z_min", "grid.z_max")
    nr = c.integer(g, "nr", "grid", d.nr, 4)
    nz = c.integer(g, "nz", "grid", d.nz, 4)
    res = c.seq(g, "resolutions", "grid", [])
    for k, n in enumerate(res):
        if isinstance(n, bool) or not isinstance(n, int) or n < 8:
            c.fail(f"expected an integer >= 8, got {n!r}", f"grid.resolutions[{k}]")
    grid = GridSpec(r_max, z_min, z_max, nr, nz, tuple(sorted(set(res))))
    sizes = [(nr, nz)] + [(gg.nr, gg.nz) for gg in map(grid.grid_for, grid.resolutions)]
    for a, b in sizes:
        if a * b > MAX_NODES:
            c.fail(f"grid {a}x{b} exceeds the memory budget of {MAX_NODES} nodes", "grid")

    t = c.section(tree, "time", ("horizon", "units", "snapshots"))
    units = t.get("units", "fraction")
    if units not in UNITS:
        c.fail(f"expected one of {', '.join(UNITS)}, got {units!r}", "time.units")
    if units == "fraction":
        horizon = c.number(t, "horizon", "time", 0.5, lo=0, hi=1, lo_open=True, hi_open=True)
    else:
        horizon = c.number(t, "horizon", "time", 0.5, lo=0, lo_open=True)
    snaps = c.seq(t, "snapshots", "time", [])
    for k in range(len(snaps)):
        snaps[k] = c.value(snaps[k], f"time.snapshots[{k}]", lo=0, hi=horizon)
    time = TimeSpec(horizon, units, tuple(sorted(set(snaps))))

    s = c.section(tree, "solver", ("cfl", "quad_tol", "root_tol", "guard", "eps"))
    d = SolverSpec()
    eps = c.seq(s, "eps", "solver", list(d.eps))
    for k in range(len(eps)):
        eps[k] = c.value(eps[k], f"solver.eps[{k}]", lo=0, hi=1, lo_open=True)
    solver = SolverSpec(
        cfl=c.number(s, "cfl", "solver", d.cfl, lo=0, hi=1, lo_open=True),
        quad_tol=c.number(s, "quad_tol", "solver", d.quad_tol, lo=0, lo_open=True),
        root_tol=c.number(s, "root_tol", "solver", d.root_tol, lo=0, lo_open=True),
        guard=c.number(s, "guard", "solver", d.guard, lo=0, hi=1, lo_open=True, hi_open=True),
        eps=tuple(sorted(set(eps), reverse=True)),
    )

    o = c.section(tree, "output", ("dir", "formats"))
    out_dir = o.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        c.fail("expected a non-empty string", "output.dir")
    formats = c.seq(o, "formats", "output", list(FORMATS))
    for k, f in enumerate(formats):
        if f not in FORMATS:
            c.fail(f"expected one of {', '.join(FORMATS)}, got {f!r}", f"output.formats[{k}]")

    return Scenario(
        name=name,
        initial_data=InitialData(init["preset"], params),
        grid=grid, time=time, solver=solver,
        output=OutputSpec(out_dir, tuple(dict.fromkeys(formats))),
        sha256=hashlib.sha256(raw).hexdigest(),
        path=path,
    )


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc.strerror}", str(path)) from exc
    try:
        raw.decode()
    except UnicodeDecodeError as exc:
        raise ScenarioError("scenario file is not valid UTF-8", str(path)) from exc
    return parse_scenario(raw, str(p))
