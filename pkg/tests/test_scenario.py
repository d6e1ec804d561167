import copy
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic.checks import REGISTRY
from pparabolic.cli import shipped_scenarios
from pparabolic.errors import ConfigError
from pparabolic.scenario import FieldSet, dumps, load_scenario, parse_scenario, snapshot_times

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BASE = {
    "name": "t",
    "pparams": {"p": 3.0, "n": 1},
    "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
    "data": {"kind": "bump", "bumps": [{"center": [0.5], "width": 0.3, "amplitude": 1.0}]},
    "solver": {"scheme": "implicit", "h": 1 / 32, "T": 0.1, "snapshots": {"linear": [0.0, 0.1, 5]}},
    "checks": [{"id": "corkscrew"}],
}


def with_change(path, value):
    raw = copy.deepcopy(BASE)
    node = raw
    for k in path[:-1]:
        node = node[k]
    if value is KeyError:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return raw


@pytest.mark.parametrize("path,value,key", [
    (("pparams", "p"), 1.5, "pparams.p"),
    (("pparams", "n"), 3, "pparams.n"),
    (("extra",), 1, "extra"),
    (("name",), "", "name"),
    (("domain", "shape"), "hexagon", "domain.shape"),
    (("data", "kind"), "wave", "data.kind"),
    (("data", "lateral"), "cubic", "data.lateral"),
    (("solver", "scheme"), "rk4", "solver.scheme"),
    (("solver", "h"), -1.0, "solver.h"),
    (("solver", "T"), KeyError, "solver.T"),
    (("output",), {"export": "xml"}, "output.export"),
    (("checks",), [], "checks"),
    (("checks",), [{"id": "nope"}], "checks[0].id"),
    (("checks",), [{"id": "corkscrew", "budget": 0}], "checks[0].budget"),
    (("checks",), [{"id": "corkscrew", "expect": "maybe"}], "checks[0].expect"),
    (("checks",), [{"id": "corkscrew", "colour": 1}], "checks[0].colour"),
    (("checks",), [{"id": "bhp_global"}], "data_b"),
])
def test_config_error_names_the_key(path, value, key):
    raw = with_change(path, value)
    with pytest.raises(ConfigError) as info:
        parse_scenario(raw)
    assert info.value.key == key


def test_closed_form_parameter_error_is_mapped():
    raw = copy.deepcopy(BASE)
    raw["data"] = {"kind": "closed_form", "family": "BarrierSuper", "params": {"k": 50.0}}
    with pytest.raises(ConfigError) as info:
        parse_scenario(raw)
    assert info.value.key == "data.params.k"


def test_bad_toml(tmp_path):
    f = tmp_path / "bad.toml"
    f.write_text("name = [unclosed")
    with pytest.raises(ConfigError) as info:
        load_scenario(f)
    assert info.value.key == "<file>"


@pytest.mark.parametrize("path", shipped_scenarios(), ids=lambda p: p.stem)
def test_shipped_scenarios_round_trip(path):
    sc = load_scenario(path)
    again = parse_scenario(tomllib.loads(dumps(sc)))
    assert again == sc


def test_every_check_is_exercised_by_a_shipped_scenario():
    used = {c["id"] for p in shipped_scenarios() for c in load_scenario(p).checks}
    assert set(REGISTRY) <= used


@given(a=st.floats(0.0, 1.0), b=st.floats(1.0, 10.0), k=st.integers(2, 50), t0=st.floats(0.0, 0.5))
def test_snapshot_times_cover_the_range(a, b, k, t0):
    ts = snapshot_times({"T": b, "snapshots": {"linear": [a, b, k]}}, t0)
    assert ts[0] == t0 and ts[-1] == b
    assert np.all(np.diff(ts) > 0)


def test_fieldset_caches_and_builds_grid():
    fs = FieldSet(parse_scenario(BASE))
    tr = fs.field("data")
    assert fs.field("data") is tr
    assert np.array_equal(tr.times, np.linspace(0, 0.1, 5))
    assert tr.grid.h == 1 / 32
