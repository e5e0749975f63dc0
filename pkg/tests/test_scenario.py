import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortex_shock.scenario import MAX_NODES, ScenarioError, load_scenario, parse_scenario

BASE = """\
name: t
initial_data:
  preset: gaussian_ring
grid: {nr: 16, nz: 33}
"""


def test_defaults():
    sc = parse_scenario(BASE)
    assert sc.time.units == "fraction" and sc.time.horizon == 0.5
    assert sc.solver.eps == (0.125, 0.0625, 0.03125, 0.015625)
    assert sc.output.formats == ("csv", "json")
    assert len(sc.sha256) == 64


def test_hash_tracks_bytes():
    assert parse_scenario(BASE).sha256 != parse_scenario(BASE + "\n").sha256


def test_unknown_key_names_line():
    with pytest.raises(ScenarioError) as info:
        parse_scenario(BASE + "solver:\n  cfl: 0.3\n  colour: red\n")
    assert info.value.key == "solver.colour" and info.value.line == 7


def test_unknown_top_level_key():
    with pytest.raises(ScenarioError, match="unknown key"):
        parse_scenario(BASE + "extra: 1\n")


def test_duplicate_key():
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenario(BASE + "name: again\n")


def test_malformed_yaml_has_line():
    with pytest.raises(ScenarioError) as info:
        parse_scenario("name: [unclosed\ninitial_data: {}\n")
    assert info.value.line is not None


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fraction_horizon_in_open_unit_interval(h):
    text = BASE + f"time: {{horizon: {h!r}}}\n"
    if 0 < h < 1:
        assert parse_scenario(text).time.horizon == h
    else:
        with pytest.raises(ScenarioError, match="time.horizon"):
            parse_scenario(text)


@pytest.mark.parametrize("eps", ["0", "-0.5", "1.5", ".nan", "'x'"])
def test_eps_range(eps):
    with pytest.raises(ScenarioError, match=r"solver.eps\[0\]"):
        parse_scenario(BASE + f"solver: {{eps: [{eps}]}}\n")


def test_memory_budget():
    side = int(math.isqrt(MAX_NODES)) + 10
    with pytest.raises(ScenarioError, match="memory budget"):
        parse_scenario(BASE.replace("nr: 16, nz: 33", f"nr: {side}, nz: {side}"))


@pytest.mark.parametrize("snippet,key", [
    ("initial_data: {preset: blob}", "initial_data.preset"),
    ("time: {units: weeks}", "time.units"),
    ("time: {horizon: 0.5, snapshots: [0.7]}", "time.snapshots[0]"),
    ("output: {formats: [xml]}", "output.formats[0]"),
    ("grid: {nr: 2}", "grid.nr"),
    ("grid: {nr: 16.5}", "grid.nr"),
    ("grid: {z_min: 1, z_max: 0}", "grid.z_max"),
    ("solver: {cfl: 2}", "solver.cfl"),
])
def test_field_validation(snippet, key):
    text = BASE.replace("grid: {nr: 16, nz: 33}\n", "")
    if snippet.startswith("initial_data"):
        text = "name: t\n" + snippet + "\n"
    else:
        text += snippet + "\n"
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.key == key


def test_times_fraction_and_absolute():
    sc = parse_scenario(BASE + "time: {horizon: 0.5, snapshots: [0.25]}\n")
    assert sc.times(2.0) == (1.0, [0.5, 1.0])
    ab = parse_scenario(BASE + "time: {horizon: 3, units: absolute}\n")
    assert ab.times(math.inf) == (3.0, [3.0])
    with pytest.raises(ScenarioError, match="never"):
        sc.times(math.inf)


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "nope.yaml")


def test_resolution_grids():
    sc = parse_scenario(
        "name: t\ninitial_data: {preset: zero}\n"
        "grid: {r_max: 4.5, z_min: -4.5, z_max: 4.5, resolutions: [128, 64]}\n")
    assert sc.grid.resolutions == (64, 128)
    g = sc.grid.grid_for(64)
    assert g.nz == 65 and g.nr == 32 and g.dr == pytest.approx(g.dz)


def test_exponent_floats_are_numbers():
    sc = parse_scenario(BASE + "solver: {guard: 1e-6, quad_tol: 2E-11}\n")
    assert sc.solver.guard == 1e-6 and sc.solver.quad_tol == 2e-11
