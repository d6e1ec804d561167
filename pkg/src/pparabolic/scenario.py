"""Scenario files: parsing, validation, serialization and field building.

A scenario is a TOML document::

    name = "disc-estimates"
    [pparams]            p, n
    [domain]             shape and shape parameters (optional for pure closed-form checks)
    [data]               kind = "closed_form" | "bump" | "barenblatt"
    [data_b]             optional second field, same layout
    [solver]             scheme, h, T, dt, growth, dt_max, eps, snapshots
    [output]             dir, export ("csv" | "bin")
    [[checks]]           id, budget, expect, [checks.params]
"""

import copy
import sys
import threading
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .closed_forms import FAMILIES, PParams, make_closed_form
from .errors import ConfigError, PParabolicError
from .geometry import domain_from_spec

__all__ = ["Scenario", "load_scenario", "parse_scenario", "dumps", "DATA_KINDS", "FieldSet"]

DATA_KINDS = ("closed_form", "bump", "barenblatt")
SCHEMES = ("implicit", "explicit")
EXPORTS = ("csv", "bin")
TOP_KEYS = {"name", "pparams", "domain", "data", "data_b", "solver", "output", "checks"}


@dataclass
class Scenario:
    name: str
    pparams: dict
    domain: dict = None
    data: dict = None
    data_b: dict = None
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def pp(self):
        return PParams(float(self.pparams["p"]), int(self.pparams.get("n", 1)))

    def build_domain(self):
        return None if self.domain is None else domain_from_spec(self.domain)

    def to_dict(self):
        out = {"name": self.name, "pparams": self.pparams}
        for key in ("domain", "data", "data_b"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.solver:
            out["solver"] = self.solver
        if self.output:
            out["output"] = self.output
        out["checks"] = self.checks
        return copy.deepcopy(out)


def dumps(scenario):
    """Serialize to TOML text; ``parse_scenario(tomllib.loads(dumps(s)))`` equals ``s``."""
    return tomli_w.dumps(scenario.to_dict())


def load_scenario(path):
    """Read and validate a scenario file.

    Raises
    ------
    ConfigError
        Naming the offending key.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"not valid TOML: {exc}") from exc
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from exc
    return parse_scenario(raw)


def _num(d, key, where, positive=True, integer=False, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key}", "missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}", f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}.{key}", f"expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where}.{key}", f"must be positive, got {v!r}")
    return v


def _table(raw, key, required=False):
    v = raw.get(key)
    if v is None:
        if required:
            raise ConfigError(key, "missing table")
        return None
    if not isinstance(v, dict):
        raise ConfigError(key, "expected a table")
    return v


def _validate_data(d, where, pp, dom):
    kind = d.get("kind")
    if kind not in DATA_KINDS:
        raise ConfigError(f"{where}.kind", f"expected one of {DATA_KINDS}, got {kind!r}")
    if kind == "closed_form":
        fam = d.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"{where}.family", f"expected one of {FAMILIES}, got {fam!r}")
        params = d.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params", "expected a table")
        try:
            make_closed_form(fam, pp, params)
        except PParabolicError as exc:
            msg = str(exc)
            key = next((k for k in params if msg.startswith(k + " ")), None)
            raise ConfigError(f"{where}.params" + (f".{key}" if key else ""), msg) from exc
        if "t_range" in d:
            tr = d["t_range"]
            if not (isinstance(tr, list) and len(tr) == 2 and tr[0] < tr[1]):
                raise ConfigError(f"{where}.t_range", "expected [t_lo, t_hi] with t_lo < t_hi")
    else:
        if dom is None:
            raise ConfigError("domain", f"{where}.kind = {kind!r} needs a domain")
    if kind == "bump":
        bumps = d.get("bumps")
        if not isinstance(bumps, list) or not bumps:
            raise ConfigError(f"{where}.bumps", "expected a non-empty array of tables")
        for i, b in enumerate(bumps):
            w = f"{where}.bumps[{i}]"
            c = b.get("center")
            if not isinstance(c, list) or len(c) != pp.n:
                raise ConfigError(f"{w}.center", f"expected {pp.n} coordinates")
            _num(b, "width", w)
            _num(b, "amplitude", w)
        lat = d.get("lateral", "zero")
        if lat not in ("zero", "half_square"):
            raise ConfigError(f"{where}.lateral", f"expected 'zero' or 'half_square', got {lat!r}")
    if kind == "barenblatt":
        _num(d, "t_b", where)
        _num(d, "C", where, default=1.0)


def parse_scenario(raw):
    """Validate a parsed TOML mapping and return a :class:`Scenario`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a table")
    extra = set(raw) - TOP_KEYS
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown top-level key")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a non-empty string")
    pparams = _table(raw, "pparams", required=True)
    p = _num(pparams, "p", "pparams")
    if p < 2:
        raise ConfigError("pparams.p", f"must be >= 2, got {p}")
    n = _num(pparams, "n", "pparams", integer=True, default=1)
    if n not in (1, 2):
        raise ConfigError("pparams.n", f"must be 1 or 2, got {n}")
    pp = PParams(float(p), int(n))
    dspec = _table(raw, "domain")
    dom = None
    if dspec is not None:
        try:
            dom = domain_from_spec(dspec)
        except (PParabolicError, TypeError) as exc:
            raise ConfigError("domain.shape" if "shape" in str(exc) else "domain", str(exc)) from exc
        if dom.n != n:
            raise ConfigError("domain.shape", f"domain dimension {dom.n} differs from pparams.n = {n}")
    data = _table(raw, "data")
    data_b = _table(raw, "data_b")
    for key, d in (("data", data), ("data_b", data_b)):
        if d is not None:
            _validate_data(d, key, pp, dom)
    solver = _table(raw, "solver") or {}
    needs_solver = any(d is not None and d.get("kind") != "closed_form" for d in (data, data_b))
    if solver or needs_solver:
        if solver.get("scheme", "implicit") not in SCHEMES:
            raise ConfigError("solver.scheme", f"expected one of {SCHEMES}")
        _num(solver, "h", "solver")
        _num(solver, "T", "solver")
        for key in ("dt", "growth", "dt_max", "eps"):
            if key in solver:
                _num(solver, key, "solver")
        snaps = solver.get("snapshots", {})
        if not isinstance(snaps, dict):
            raise ConfigError("solver.snapshots", "expected a table")
        for key, v in snaps.items():
            if key not in ("linear", "geom", "list"):
                raise ConfigError(f"solver.snapshots.{key}", "expected linear, geom or list")
            if key != "list" and not (isinstance(v, list) and len(v) == 3 and v[2] >= 2):
                raise ConfigError(f"solver.snapshots.{key}", "expected [t_lo, t_hi, count]")
    output = _table(raw, "output") or {}
    if "export" in output and output["export"] not in EXPORTS:
        raise ConfigError("output.export", f"expected one of {EXPORTS}")
    if "dir" in output and not isinstance(output["dir"], str):
        raise ConfigError("output.dir", "expected a string")
    checks = raw.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks", "expected a non-empty array of tables")
    from .checks import REGISTRY
    for i, c in enumerate(checks):
        w = f"checks[{i}]"
        if not isinstance(c, dict):
            raise ConfigError(w, "expected a table")
        cid = c.get("id")
        if cid not in REGISTRY:
            raise ConfigError(f"{w}.id", f"unknown check id {cid!r}")
        if "budget" in c:
            _num(c, "budget", w)
        if c.get("expect", "pass") not in ("pass", "fail"):
            raise ConfigError(f"{w}.expect", "expected 'pass' or 'fail'")
        if not isinstance(c.get("params", {}), dict):
            raise ConfigError(f"{w}.params", "expected a table")
        unknown = set(c) - {"id", "budget", "expect", "params", "label"}
        if unknown:
            raise ConfigError(f"{w}.{sorted(unknown)[0]}", "unknown key")
        need = REGISTRY[cid].needs
        for key in need:
            if key == "domain" and dom is None:
                raise ConfigError("domain", f"check {cid!r} needs a domain")
            if key in ("data", "data_b") and {"data": data, "data_b": data_b}[key] is None:
                raise ConfigError(key, f"check {cid!r} needs [{key}]")
    return Scenario(name, dict(pparams), None if dspec is None else dict(dspec),
                    None if data is None else dict(data), None if data_b is None else dict(data_b),
                    dict(solver), dict(output), [dict(c) for c in checks])


# ---------------------------------------------------------------------------
# fields


def snapshot_times(solver, t0=0.0):
    """Snapshot times from the ``solver.snapshots`` table, always with ``t0`` and ``T``."""
    snaps = solver.get("snapshots", {})
    T = float(solver["T"])
    parts = [np.array([t0, T])]
    if "linear" in snaps:
        a, b, k = snaps["linear"]
        parts.append(np.linspace(a, b, int(k)))
    if "geom" in snaps:
        a, b, k = snaps["geom"]
        parts.append(np.geomspace(a, b, int(k)))
    if "list" in snaps:
        parts.append(np.asarray(snaps["list"], float))
    ts = np.unique(np.concatenate(parts))
    return ts[(ts >= t0) & (ts <= T)]


def _bump_initial(d, dom):
    bumps = d["bumps"]
    lateral = d.get("lateral", "zero")
    axis = int(d.get("axis", dom.n - 1))

    def lat(X, t=None):
        return np.maximum(X[:, axis], 0.0) ** 2 if lateral == "half_square" else np.zeros(len(X))

    def initial(X):
        out = lat(X)
        for b in bumps:
            c = np.asarray(b["center"], float)
            q = 1 - np.sum((X - c) ** 2, axis=1) / float(b["width"]) ** 2
            out = out + float(b["amplitude"]) * np.maximum(q, 0.0) ** 2
        return out

    return initial, (None if lateral == "zero" else lat)


class FieldSet:
    """Fields of a scenario, built once and shared read-only by the checks."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.pp = scenario.pp
        self.domain = scenario.build_domain()
        self.solver = scenario.solver
        self._fields = {}
        self._grid = None
        self._lock = threading.RLock()

    @property
    def h(self):
        return float(self.solver["h"]) if "h" in self.solver else None

    def grid(self):
        from .solver import Grid
        with self._lock:
            if self._grid is None:
                self._grid = Grid(self.domain, self.h)
            return self._grid

    def form(self, key="data"):
        d = getattr(self.scenario, key)
        if d is None or d["kind"] != "closed_form":
            return None
        return make_closed_form(d["family"], self.pp, d.get("params", {}))

    def t_range(self, key="data"):
        d = getattr(self.scenario, key)
        return tuple(d["t_range"]) if d is not None and "t_range" in d else None

    def field(self, key="data"):
        """Trajectory or ClosedForm for ``key``."""
        with self._lock:
            if key not in self._fields:
                self._fields[key] = self._build(key)
            return self._fields[key]

    def trajectory(self, key="data"):
        """Always a trajectory; closed forms are sampled at the snapshot times."""
        from .solver import sample_closed_form
        f = self.field(key)
        if isinstance(f, tuple(_closed_types())):
            tkey = key + ":sampled"
            with self._lock:
                if tkey not in self._fields:
                    self._fields[tkey] = sample_closed_form(f, self.grid(), snapshot_times(self.solver))
                return self._fields[tkey]
        return f

    def view_kwargs(self, key="data"):
        f = self.field(key)
        if isinstance(f, tuple(_closed_types())):
            return {"domain": self.domain, "h": self.h, "t_range": self.t_range(key)}
        return {}

    def _build(self, key):
        from .estimates import barenblatt
        from .solver import build_problem, solve
        d = getattr(self.scenario, key)
        if d is None:
            raise ConfigError(key, "missing data table")
        if d["kind"] == "closed_form":
            return self.form(key)
        s = self.solver
        if d["kind"] == "bump":
            initial, lateral = _bump_initial(d, self.domain)
        else:
            t_b, C = float(d["t_b"]), float(d.get("C", 1.0))
            center = np.asarray(d.get("center", [0.0] * self.pp.n), float)

            def initial(X):
                return barenblatt(X - center, t_b, self.pp, C)
            lateral = None
        t0 = float(d["t_b"]) if d["kind"] == "barenblatt" else 0.0
        T = float(s["T"])
        prob = build_problem(self.domain, self.pp, initial, lateral, T=T, eps=s.get("eps"),
                             scheme=s.get("scheme", "implicit"), grid=self.grid(), t0=t0)
        return solve(prob, snapshot_times(s, t0), dt=s.get("dt", (T - t0) / 1000),
                     growth=s.get("growth", 1.0), dt_max=s.get("dt_max"))


def _closed_types():
    from .closed_forms import ClosedForm
    return [ClosedForm]
