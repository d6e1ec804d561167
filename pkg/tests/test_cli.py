import json
import subprocess
import sys
from pathlib import Path

import pytest

from pparabolic.checks import REGISTRY
from pparabolic.cli import ENV_ROOT, main, run_scenario, shipped_scenarios

SCEN = {p.stem: p for p in shipped_scenarios()}

SMALL = """
name = "small"
[pparams]
p = 3.0
n = 1
[domain]
shape = "interval"
[data]
kind = "bump"
bumps = [{{ center = [0.5], width = 0.3, amplitude = 1.0 }}]
[solver]
h = 0.03125
T = 0.1
snapshots = {{ linear = [0.0, 0.1, 5] }}
[output]
export = "csv"
[[checks]]
id = "carleson"
[checks.params]
x = [{x}]
t = 0.1
r = 0.25
"""


def strip_times(report):
    for c in report["checks"]:
        c.pop("runtime_ms")
    return report


@pytest.fixture
def small(tmp_path):
    def make(x=0.0):
        f = tmp_path / f"small_{x}.toml"
        f.write_text(SMALL.format(x=x))
        return f
    return make


def test_run_writes_report(tmp_path):
    code, art, rep = run_scenario(SCEN["barriers-p3"], out=tmp_path)
    assert code == 0
    on_disk = json.loads((art / "report.json").read_text())
    assert on_disk["exit_code"] == 0 and on_disk["scenario"] == "barriers-p3"
    keys = {"id", "label", "params", "expect", "runtime_ms", "lhs", "rhs", "fitted_constant",
            "budget", "holds", "pass", "margin", "error", "files"}
    for c in on_disk["checks"]:
        assert keys <= set(c)
    assert (art / "summary.csv").exists()
    assert any(c["expect"] == "fail" and not c["holds"] and c["pass"] for c in on_disk["checks"])


def test_run_is_deterministic_and_thread_independent(tmp_path):
    _, _, a = run_scenario(SCEN["bhp-counterexample"], out=tmp_path / "a")
    _, _, b = run_scenario(SCEN["bhp-counterexample"], out=tmp_path / "b", threads=4)
    assert strip_times(a) == strip_times(b)


def test_env_var_sets_output_root(tmp_path, monkeypatch, small):
    monkeypatch.setenv(ENV_ROOT, str(tmp_path / "env"))
    assert main(["run", str(small())]) == 0
    assert (tmp_path / "env" / "small" / "report.json").exists()
    assert (tmp_path / "env" / "small" / "trajectory_data.csv").exists()


def test_out_flag_overrides_env(tmp_path, monkeypatch, small):
    monkeypatch.setenv(ENV_ROOT, str(tmp_path / "env"))
    assert main(["--threads", "2", "run", str(small()), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "small" / "report.json").exists()
    assert not (tmp_path / "env").exists()


def test_hypothesis_violation_exits_2(tmp_path, small):
    code, art, rep = run_scenario(small(0.5), out=tmp_path)
    assert code == 2
    err = rep["checks"][0]["error"]
    assert err["type"] == "HypothesisViolation" and err["hypothesis"]


def test_validate(tmp_path, small, capsys):
    assert main(["validate", str(small())]) == 0
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.format(x=0.0).replace('id = "carleson"', 'id = "nonsense"'))
    assert main(["validate", str(bad)]) == 1
    assert "checks[0].id" in capsys.readouterr().err
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 1


def test_list_checks(capsys):
    assert main(["list-checks"]) == 0
    out = capsys.readouterr().out
    for cid in REGISTRY:
        assert cid in out


def test_export_round_trip(tmp_path, small, monkeypatch):
    monkeypatch.setenv(ENV_ROOT, str(tmp_path))
    main(["run", str(small())])
    src = tmp_path / "small" / "trajectory_data.csv"
    assert main(["export", str(src), "bin"]) == 0
    binf = src.with_suffix(".bin")
    assert main(["export", str(binf), "csv", "-o", str(tmp_path / "back.csv")]) == 0
    assert (tmp_path / "back.csv").read_text() == src.read_text()
    assert main(["export", str(src), "csv"]) == 1


def test_bad_threads():
    assert main(["--threads", "0", "list-checks"]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "pparabolic", "list-checks"], capture_output=True, text=True)
    assert r.returncode == 0 and "carleson" in r.stdout
