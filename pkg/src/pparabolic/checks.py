"""Registry of scenario checks.

Every check is a function ``fn(fs, params, budget, files)`` that takes the
scenario's :class:`~pparabolic.scenario.FieldSet`, the check parameters,
an optional budget override and a dict it may fill with CSV writers
(``name -> callable(path)``).  It returns an
:class:`~pparabolic.reports.InequalityReport`.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import chains, closed_forms, estimates, geometry, measure, solver
from .closed_forms import PParams, friendly_giant_coefficient, make_closed_form
from .errors import HypothesisViolation, NoCurve, OutOfRange
from .fields import FieldView
from .reports import InequalityReport

__all__ = ["REGISTRY", "Check", "register", "sample_cover_config", "random_ordered_pair"]


@dataclass(frozen=True)
class Check:
    id: str
    fn: object
    needs: tuple
    doc: str

    def __call__(self, fs, params, budget=None, files=None):
        return self.fn(fs, dict(params), budget, {} if files is None else files)


REGISTRY = {}


def register(cid, needs=()):
    def deco(fn):
        doc = (fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else ""
        REGISTRY[cid] = Check(cid, fn, tuple(needs), doc)
        return fn
    return deco


def _budget(budget, default):
    return float(default if budget is None else budget)


def _view(fs, key="data"):
    return FieldView(fs.field(key), **fs.view_kwargs(key))


def _rows_writer(header, rows):
    def write(path):
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(repr(float(v)) if not isinstance(v, str) else v for v in r) + "\n")
        return path
    return write


def _drift(fn, F, scales, p, t):
    """Largest relative change of ``fn(F, t)`` under intrinsic rescaling."""
    base = fn(F, t)
    out = 0.0
    for lam in scales:
        v = fn(F.scaled(lam), t * lam ** (2 - p))
        out = max(out, abs(v - base) / max(abs(base), 1e-300))
    return out


# ---------------------------------------------------------------------------
# closed forms


_KIND_OK = {"Subsolution": ("Subsolution", "Solution"), "Supersolution": ("Supersolution", "Solution"),
            "Solution": ("Solution",), "Neither": ("Neither",)}


@register("classify_region")
def _classify(fs, prm, budget, files):
    """Residual sign of closed forms over a parameter grid."""
    family = prm.get("family") or (fs.scenario.data or {}).get("family")
    if family is None:
        raise OutOfRange("classify_region needs a family")
    expect = prm.get("expect", {"BarrierSub": "Subsolution", "BarrierSuper": "Supersolution"}.get(family, "Solution"))
    p_list = prm.get("p_list", [fs.pp.p])
    n_list = prm.get("n_list", [fs.pp.n])
    grids = prm.get("params_list", [prm.get("params", (fs.scenario.data or {}).get("params", {}))])
    n_samples = int(prm.get("n_samples", 10_000))
    tol = float(prm.get("tol", 1e-10))
    rows, bad, total = [], 0, 0
    worst = -math.inf
    for p in p_list:
        for n in n_list:
            for par in grids:
                form = make_closed_form(family, PParams(float(p), int(n)), par)
                c = closed_forms.classify_region(form, tol=tol, n_samples=n_samples, seed=int(prm.get("seed", 0)))
                total += c.n_samples
                ok = c.kind in _KIND_OK[expect]
                bad += not ok
                signed = c.max_residual if expect == "Subsolution" else -c.min_residual
                worst = max(worst, signed)
                rows.append({"p": p, "n": n, "params": dict(par), "kind": c.kind, "samples": c.n_samples,
                             "max_residual": c.max_residual, "min_residual": c.min_residual})
    return InequalityReport("classify_region", worst, tol, float(bad), _budget(budget, 0.0),
                            {"family": family, "expect": expect, "n_samples": n_samples, "tol": tol},
                            {"configs": rows, "total_samples": total})


@register("p2_limit")
def _p2_limit(fs, prm, budget, files):
    """Distance of the subsolution barrier to its p -> 2 limit along a p sequence."""
    p_list = prm.get("p_list", [3.0, 2.5, 2.1, 2.01])
    a = float(prm.get("a", 0.5))
    n = int(prm.get("n", fs.pp.n))
    d = closed_forms.p2_limit_distance(a, n, p_list)
    steps = sum(1 for x, y in zip(d, d[1:]) if not y < x)
    files["p2_limit.csv"] = _rows_writer(["p", "distance"], list(zip(p_list, d)))
    return InequalityReport("p2_limit", d[-1], d[0], float(steps), _budget(budget, 0.0),
                            {"a": a, "n": n, "p_list": list(p_list)}, {"distances": d})


@register("gradient_lower_bound")
def _grad_lower(fs, prm, budget, files):
    """Boundary gradient of the subsolution barrier against its lower bound."""
    rows, worst = [], 0.0
    for p in prm.get("p_list", [fs.pp.p]):
        for a in prm.get("a_list", [0.5]):
            form = make_closed_form("BarrierSub", PParams(float(p), fs.pp.n), {"a": a})
            obs, bound = closed_forms.gradient_lower_bound(form)
            worst = max(worst, bound / obs)
            rows.append({"p": p, "a": a, "observed": obs, "bound": bound})
    return InequalityReport("gradient_lower_bound", worst, 1.0, worst, _budget(budget, 1.0),
                            {"n": fs.pp.n}, {"configs": rows})


# ---------------------------------------------------------------------------
# geometry


@register("corkscrew", needs=("domain",))
def _corkscrew(fs, prm, budget, files):
    """Corkscrew conditions at boundary samples and radii."""
    dom = fs.domain
    n_pts = int(prm.get("n_points", 64))
    fracs = prm.get("radius_fractions", [0.05, 0.25, 0.5, 0.95])
    pts, _, w = dom.boundary_samples(float(prm.get("spacing", 0.05)))
    idx = np.linspace(0, len(pts) - 1, min(n_pts, len(pts))).astype(int)
    bad, checked = 0, 0
    for i in idx:
        for f in fracs:
            checked += 1
            bad += not geometry.corkscrew_holds(dom, pts[i], f * dom.r0)
    return InequalityReport("corkscrew", float(bad), 0.0, float(bad), _budget(budget, 0.0),
                            {"shape": dom.spec(), "radius_fractions": list(fracs)},
                            {"checked": checked, "M": dom.M})


@register("st1pp", needs=("data",))
def _st1pp(fs, prm, budget, files):
    """Intrinsic time condition at sampled points of a closed-form field."""
    form = fs.form()
    p = fs.pp.p
    C0 = float(prm.get("C0", friendly_giant_coefficient(p) ** (p - 2) if p > 2 else 1.0))
    T = float(prm.get("T", form["T"]))
    expect = bool(prm.get("expect_satisfied", False))
    xs = np.asarray(prm.get("xs", np.geomspace(1e-3, 0.9, 32).tolist()), float)
    ts = np.asarray(prm.get("ts", np.linspace(0.0, 0.9 * T, 9).tolist()), float)
    mism = 0
    for t in ts:
        X = np.zeros((len(xs), fs.pp.n))
        X[:, -1] = xs
        u = closed_forms.values(form, X, t)
        for uu, xx in zip(u, xs):
            mism += geometry.st1pp_satisfied(float(uu), float(xx), T, float(t), C0, fs.pp) != expect
    return InequalityReport("st1pp", float(mism), 0.0, float(mism), _budget(budget, 0.0),
                            {"C0": C0, "T": T, "expect_satisfied": expect},
                            {"points": int(len(xs) * len(ts))})


# ---------------------------------------------------------------------------
# chains


def sample_cover_config(dom, rng):
    """Random ``(x, y, r)`` admissible for :func:`cover_curve`.

    ``x`` lies within ``r`` of the boundary, at distances spread over
    three decades; ``y`` is within ``r`` of the same boundary point with
    ``d(y) >= r/4``.
    """
    pts, nrm, _ = dom.boundary_samples(0.01 * dom.scale)
    while True:
        i = rng.integers(len(pts))
        x0, nu = pts[i], nrm[i]
        r = rng.uniform(0.05, 0.95) * dom.r0
        rho = r * 10 ** rng.uniform(-3, 0)
        x = x0 + rho * nu
        if dom.n > 1:
            tang = rng.normal(size=dom.n)
            tang -= tang @ nu * nu
            x = x + rng.uniform(0, 0.5) * r * tang / max(np.linalg.norm(tang), 1e-300)
        y = x0 + 0.5 * r * nu + 0.2 * r * rng.uniform(-1, 1, dom.n)
        if (np.linalg.norm(x - x0) < r and np.linalg.norm(y - x0) < r
                and dom.distance(y) >= r / 4 and 0 < dom.distance(x) <= r):
            return x, y, r


@register("cover_curve", needs=("domain",))
def _cover(fs, prm, budget, files):
    """Cover invariants (admissible, consecutive, dyadic) over random configurations."""
    dom = fs.domain
    rng = np.random.default_rng(int(prm.get("seed", 0)))
    n_cfg = int(prm.get("n_configs", 1000))
    N = int(prm.get("N", 2 ** 9 * dom.M))
    bad = nocurve = floor = balls = 0
    for _ in range(n_cfg):
        x, y, r = sample_cover_config(dom, rng)
        try:
            c = chains.cover_curve(dom, x, y, r, N)
        except NoCurve:
            nocurve += 1
            continue
        except HypothesisViolation:
            floor += 1
            continue
        balls += len(c)
        bad += not all(c.invariants().values())
    fitted = float(bad + nocurve)
    return InequalityReport("cover_curve", fitted, 0.0, fitted, _budget(budget, 0.0),
                            {"shape": dom.spec(), "n_configs": n_cfg, "N": N},
                            {"invariant_failures": bad, "no_curve": nocurve,
                             "below_resolution_floor": floor, "mean_balls": balls / max(1, n_cfg - floor - nocurve)})


@register("forward_schedule")
def _schedule(fs, prm, budget, files):
    """Forward chain schedule against its closed-form tau."""
    p = float(prm.get("p", fs.pp.p))
    c1, c2 = float(prm.get("c1", 1.0)), float(prm.get("c2", 2.0))
    Lam, r = float(prm.get("Lam", 1.0)), float(prm.get("r", 1.0))
    worst = 0.0
    for k in prm.get("k_list", list(range(0, 33))):
        s = chains.forward_schedule(Lam, r, k, c1, c2, p)
        want = c1 * (k + 1) if p == 2 else c1 * sum(c2 ** (j * (p - 2)) for j in range(k + 1))
        end = want * Lam ** (2 - p) * r ** p
        err = abs(s.tau - want) if p == 2 else abs(s.tau - want) / want
        err = max(err, abs(s.times[-1] - s.times[0] - end) / end if p != 2 else abs(s.times[-1] - s.times[0] - end))
        worst = max(worst, err)
    return InequalityReport("forward_schedule", worst, 0.0, worst, _budget(budget, 0.0 if p == 2 else 1e-12),
                            {"p": p, "c1": c1, "c2": c2, "Lam": Lam, "r": r}, {})


def _harnack(variant):
    def fn(fs, prm, budget, files):
        F = _view(fs)
        x0, t0, r = prm["x0"], float(prm["t0"]), float(prm["r"])
        kw = {k: prm[k] for k in ("c_h_grid", "C1") if k in prm}
        rep = chains.check_harnack(F, x0, t0, r, variant=variant, budget=budget, **kw)
        if prm.get("scales"):
            rep.details["scaling_drift"] = _drift(
                lambda G, t: chains.check_harnack(G, x0, t, r, variant=variant, **kw).fitted_constant,
                F, prm["scales"], fs.pp.p, t0)
        return rep
    fn.__doc__ = f"Local Harnack inequality ({variant}) at one point."
    return fn


register("harnack_intrinsic", needs=("data", "domain"))(_harnack("intrinsic"))
register("harnack_weak", needs=("data", "domain"))(_harnack("weak"))


@register("chain", needs=("data", "domain"))
def _chain(fs, prm, budget, files):
    """One boundary Harnack-chain estimate."""
    F = _view(fs)
    return chains.check_chain(F, prm["x"], prm["y"], float(prm["t"]), float(prm["r"]),
                              delta=float(prm.get("delta", 1.0)),
                              direction=prm.get("direction", "forward_mean"),
                              constants=prm.get("constants"), budget=budget, x0=prm.get("x0"))


@register("chain_sweep", needs=("data", "domain"))
def _chain_sweep(fs, prm, budget, files):
    """Chain constants over a delta sweep."""
    F = _view(fs)
    return chains.check_chain_sweep(F, prm["xs"], prm["y"], float(prm["t"]), float(prm["r"]),
                                    deltas=tuple(prm.get("deltas", (1.0, 0.5, 0.25))),
                                    direction=prm.get("direction", "forward_mean"),
                                    constants=prm.get("constants"), budget=budget, x0=prm.get("x0"))


# ---------------------------------------------------------------------------
# solver


@register("solver_benchmark")
def _benchmark(fs, prm, budget, files):
    """Sup error against the friendly giant and its observed order."""
    p = float(prm.get("p", fs.pp.p))
    pp = PParams(p, 1)
    T_fg = float(prm.get("T_fg", 1.0))
    horizon = float(prm.get("horizon", 0.5 * T_fg))
    hs = [float(h) for h in prm.get("h_list", [1 / 64, 1 / 128, 1 / 256])]
    scheme = prm.get("scheme", "explicit")
    dom = geometry.Interval(0.0, 1.0)
    fg = make_closed_form("FriendlyGiant", pp, {"T": T_fg})
    snaps = np.linspace(0, horizon, int(prm.get("n_snap", 11)))
    errs = []
    for h in hs:
        prob = solver.build_problem(dom, pp, fg, fg, T=horizon, scheme=scheme, h=h)
        tr = solver.solve(prob, snaps, dt=h ** 2 if scheme == "implicit" else None)
        g = tr.grid
        ins = g.mask == solver.INSIDE
        errs.append(max(float(np.max(np.abs(tr.U[k] - closed_forms.values(fg, g.X, t))[ins]))
                        for k, t in enumerate(tr.times)))
    orders = [math.log(a / b) / math.log(ha / hb) for a, b, ha, hb in zip(errs, errs[1:], hs, hs[1:])]
    min_order = min(orders)
    need = float(prm.get("min_order", 0.8))
    files["solver_benchmark.csv"] = _rows_writer(["h", "sup_error"], list(zip(hs, errs)))
    return InequalityReport("solver_benchmark", need, min_order, 1.0 / min_order if min_order > 0 else math.inf,
                            _budget(budget, 1.0 / need),
                            {"p": p, "T_fg": T_fg, "horizon": horizon, "h_list": hs, "scheme": scheme},
                            {"errors": errs, "orders": orders, "c_p": friendly_giant_coefficient(p),
                             "note": "passes iff the smallest observed order is at least 1/budget"})


def random_ordered_pair(grid, rng, n_bumps=3):
    """Initial data ``u0 <= v0`` built from random bumps inside the domain."""
    dom = grid.domain
    lo, hi = (np.asarray(b, float) for b in dom.bbox())
    X = grid.X

    def bumps(k):
        out = np.zeros(grid.N)
        for _ in range(k):
            while True:
                c = rng.uniform(lo, hi)
                d = dom.distance(c)
                if d > 0.05 * dom.scale:
                    break
            w = rng.uniform(0.2, 0.9) * d
            q = 1 - np.sum((X - c) ** 2, axis=1) / w ** 2
            out += rng.uniform(0.1, 2.0) * np.maximum(q, 0.0) ** 2
        return out

    u0 = bumps(rng.integers(1, n_bumps + 1))
    return u0, u0 + bumps(1)


def _paired_run(dom, pp, grid, u0, v0, T, scheme, n_steps=8):
    """Evolve two initial data with one shared step sequence.

    The explicit scheme is monotone for a fixed step, so both runs use
    the smaller of the two stability bounds at every step.
    """
    pu = solver.build_problem(dom, pp, u0, None, T=T, scheme=scheme, grid=grid)
    pv = solver.build_problem(dom, pp, v0, None, T=T, scheme=scheme, grid=grid)
    su, sv = solver.State(0.0, pu.initial.copy()), solver.State(0.0, pv.initial.copy())
    Uu, Uv = [su.u.copy()], [sv.u.copy()]
    while su.t < T * (1 - 1e-12):
        if scheme == "explicit":
            dt = 0.9 * min(solver.cfl_bound(su.u, pu), solver.cfl_bound(sv.u, pv))
        else:
            dt = T / n_steps
        dt = min(dt, T - su.t)
        su, sv = solver.step(su, dt, pu), solver.step(sv, dt, pv)
        Uu.append(su.u.copy())
        Uv.append(sv.u.copy())
    return np.array(Uu), np.array(Uv)


@register("comparison", needs=("domain",))
def _comparison(fs, prm, budget, files):
    """Comparison principle and L1 contraction over random ordered pairs."""
    dom = fs.domain
    pp = fs.pp
    rng = np.random.default_rng(int(prm.get("seed", 0)))
    n_pairs = int(prm.get("n_pairs", 1000))
    h = float(prm.get("h", 1 / 32))
    T = float(prm.get("T", 0.01))
    tols = {"explicit": float(prm.get("tol_explicit", 1e-12)), "implicit": float(prm.get("tol_implicit", 1e-8))}
    schemes = prm.get("schemes", ["explicit", "implicit"])
    grid = solver.Grid(dom, h)
    viol = {s: {"order": 0, "l1": 0} for s in schemes}
    worst = 0.0
    for i in range(n_pairs):
        u0, v0 = random_ordered_pair(grid, rng)
        for s in schemes:
            Uu, Uv = _paired_run(dom, pp, grid, u0, v0, T, s)
            tol = tols[s] * max(1.0, float(v0.max()))
            gap = float(np.max(Uu - Uv))
            l1 = np.sum(np.abs(Uv - Uu), axis=1) * grid.weight
            grow = float(np.max(np.diff(l1)))
            worst = max(worst, gap / tol, grow / (tol * grid.N * grid.weight))
            viol[s]["order"] += gap > tol
            viol[s]["l1"] += grow > tol * grid.N * grid.weight
    count = float(sum(v["order"] + v["l1"] for v in viol.values()))
    return InequalityReport("comparison", worst, 1.0, count, _budget(budget, 0.0),
                            {"n_pairs": n_pairs, "h": h, "T": T, "schemes": list(schemes), "tolerances": tols},
                            {"violations": viol, "worst_relative_to_tol": worst})


def _testfn(prm, fs, traj):
    t_lo, t_hi = traj.t_start, traj.t_end
    c = prm.get("center")
    if c is None:
        lo, hi = (np.asarray(b, float) for b in fs.domain.bbox())
        c = (0.5 * (lo + hi)).tolist()
    radius = float(prm.get("radius", 0.25 * fs.domain.distance(c)))
    s = float(prm.get("s", 0.5 * (t_lo + t_hi)))
    tau = float(prm.get("tau", 0.45 * (t_hi - t_lo)))
    return measure.TestFunction(c, s, radius, tau, m=int(prm.get("m", 3)))


def _relative_residual(traj, phi, C):
    res = solver.diagnostics(traj, phi, C)
    _, tol = measure.riesz_apply(traj, phi, full=True)
    scale = tol / measure.QUAD_RTOL
    return abs(res["weak_residual"]) / scale, res, scale


@register("weak_residual", needs=("data", "domain"))
def _weak(fs, prm, budget, files):
    """Weak-form residual of the solution against an interior test function."""
    traj = fs.trajectory()
    phi = _testfn(prm, fs, traj)
    rel, res, scale = _relative_residual(traj, phi, None)
    return InequalityReport("weak_residual", abs(res["weak_residual"]), scale, rel, _budget(budget, 1e-2),
                            {"test_function": phi.describe()},
                            {"caccioppoli_fitted_C": res["fitted_C"], "weak_residual": res["weak_residual"]})


@register("change_of_variables", needs=("data", "domain"))
def _cov(fs, prm, budget, files):
    """Weak residual of the reaction equation after the change of variables."""
    C = float(prm.get("C", 1.0))
    w = solver.change_of_variables(fs.trajectory(), C)
    phi = _testfn(prm, fs, w)
    rel, res, scale = _relative_residual(w, phi, C)
    base, _, _ = _relative_residual(fs.trajectory(), _testfn(prm, fs, fs.trajectory()), 0.0)
    return InequalityReport("change_of_variables", abs(res["weak_residual"]), scale, rel,
                            _budget(budget, 1e-2),
                            {"C": C, "test_function": phi.describe()},
                            {"untransformed_relative_residual": base, "weak_residual": res["weak_residual"]})


# ---------------------------------------------------------------------------
# estimates


@register("oscillation_decay", needs=("data", "domain"))
def _osc(fs, prm, budget, files):
    """Oscillation decay of a boundary-vanishing field."""
    F = _view(fs)
    kw = {"sigma_grid": prm["sigma_grid"]} if "sigma_grid" in prm else {}
    if budget is not None:
        kw["budget"] = budget
    return estimates.check_oscillation_decay(F, prm["x0"], float(prm["t0"]), float(prm["r"]),
                                             float(prm.get("lam", 1.0)), **kw)


@register("carleson", needs=("data", "domain"))
def _carleson(fs, prm, budget, files):
    """Carleson estimate at a boundary point."""
    F = _view(fs)
    x, t, r = prm["x"], float(prm["t"]), float(prm["r"])
    kw = {k: prm[k] for k in ("delta1", "delta2", "delta3", "lam", "C4", "C5", "c6", "c7", "strict") if k in prm}
    rep = estimates.check_carleson(F, x, t, r, budget=budget, **kw)
    if prm.get("scales"):
        rep.details["scaling_drift"] = _drift(
            lambda G, tt: estimates.check_carleson(G, x, tt, r, **kw).fitted_constant,
            F, prm["scales"], fs.pp.p, t)
    return rep


@register("decay_upper", needs=("data", "domain"))
def _decay_upper(fs, prm, budget, files):
    """Sup-norm decay exponent (long or short time)."""
    traj = fs.trajectory()
    regime = prm.get("regime", "long")
    window = tuple(prm["window"]) if "window" in prm else None
    fit = estimates.fit_decay_envelope(traj, "upper", anchor=prm.get("anchor"), regime=regime,
                                       c2=float(prm.get("c2", 1.0)), window=window,
                                       t_origin=float(prm.get("t_origin", 0.0)))
    files[f"decay_upper_{regime}.csv"] = fit.to_csv
    if math.isnan(fit.expected_exponent):
        fitted, lhs, rhs, dflt = 1 - fit.r2, fit.r2, 1.0, 0.01
    else:
        fitted, lhs, rhs, dflt = fit.relative_error, fit.fitted_exponent, fit.expected_exponent, 0.05
    return InequalityReport("decay_upper", lhs, rhs, fitted, _budget(budget, dflt),
                            {"regime": regime, "c2": prm.get("c2", 1.0), "window": list(fit.window)},
                            fit.to_dict())


@register("decay_lower", needs=("data", "domain"))
def _decay_lower(fs, prm, budget, files):
    """Pointwise lower decay envelope inside a ball."""
    traj = fs.trajectory()
    c2 = prm.get("c2")
    fit = estimates.fit_decay_envelope(traj, "lower", anchor=prm["anchor"],
                                       c2=None if c2 is None else float(c2),
                                       window=tuple(prm["window"]) if "window" in prm else None)
    files["decay_lower.csv"] = fit.to_csv
    ok = bool(np.all(fit.values >= fit.envelope * (1 - 1e-9)))
    d = fit.to_dict()
    d["envelope_holds"] = ok
    return InequalityReport("decay_lower", fit.envelope_constant, 1.0, fit.envelope_constant,
                            _budget(budget, 100.0), {"anchor": prm["anchor"], "c2": fit.c2}, d)


def _bhp(scope):
    def fn(fs, prm, budget, files):
        tu, tv = fs.trajectory("data"), fs.trajectory("data_b")
        kw = {k: prm[k] for k in ("T_minus", "T_plus", "C1bar", "c4", "c6", "c3_budget") if k in prm}
        if "eps_grid" in prm:
            kw["eps_grid"] = tuple(prm["eps_grid"])
        site = None
        if scope == "local":
            site = (tuple(prm["x0"]), float(prm["t0"]), float(prm["r"]))
        return estimates.check_boundary_harnack(tu, tv, scope=scope, site=site, budget=budget, **kw)
    fn.__doc__ = f"Boundary Harnack principle ({scope})."
    return fn


register("bhp_global", needs=("data", "data_b", "domain"))(_bhp("global"))
register("bhp_local", needs=("data", "data_b", "domain"))(_bhp("local"))


@register("bhp_counterexample")
def _bhp_ce(fs, prm, budget, files):
    """Friendly giant against the linear solution: the lower ratio bound must fail."""
    kw = {k: prm[k] for k in ("T", "C0", "n_x", "n_t") if k in prm}
    for k in ("t_window", "bands"):
        if k in prm:
            kw[k] = tuple(prm[k])
    if budget is not None:
        kw["budget"] = budget
    return estimates.bhp_counterexample(p=float(prm.get("p", fs.pp.p)), **kw)


# ---------------------------------------------------------------------------
# measure


@register("measure_density", needs=("data", "domain"))
def _density(fs, prm, budget, files):
    """Boundary density against an exact value or against the weak action."""
    traj = fs.trajectory()
    window = tuple(prm.get("window", (traj.t_start, traj.t_end)))
    est = measure.boundary_density(traj, window, n_time=int(prm.get("n_time", 17)),
                                   strict=bool(prm.get("strict", True)))
    files["density.csv"] = est.to_csv
    mode = prm.get("mode", "exact")
    if mode == "exact":
        exact = float(prm["exact"])
        dens = est.density
        if "site" in prm:
            near = np.linalg.norm(est.points - np.atleast_1d(prm["site"]), axis=1) < float(prm.get("site_radius", 1e-6))
            dens = dens[:, near]
        if dens.size == 0:
            raise OutOfRange("no boundary samples near the site")
        err = float(np.max(np.abs(dens - exact)))
        return InequalityReport("measure_density", err, exact, err / exact, _budget(budget, 1e-3),
                                {"mode": mode, "window": list(window), "site": prm.get("site")},
                                {"density_min": float(dens.min()), "density_max": float(dens.max())})
    if mode != "consistency":
        raise OutOfRange(f"unknown mode {mode!r}")
    rng = np.random.default_rng(int(prm.get("seed", 0)))
    r_max = float(prm.get("r_max", 0.25 * fs.domain.r0))
    bumps = measure._bump_family(fs.domain, window, int(prm.get("n_boxes", 20)), rng, r_max)
    rows, worst = [], 0.0
    for phi in bumps:
        a = est.apply(phi)
        b = measure.riesz_apply(traj, phi)
        e = abs(a - b) / max(abs(b), 1e-300)
        worst = max(worst, e)
        rows.append((a, b, e))
    files["density_consistency.csv"] = _rows_writer(["density_action", "weak_action", "relative_error"], rows)
    return InequalityReport("measure_density", worst, 1.0, worst, _budget(budget, 0.05),
                            {"mode": mode, "window": list(window), "n_boxes": len(bumps)},
                            {"errors": [r[2] for r in rows]})


def _bounds(side):
    def fn(fs, prm, budget, files):
        kw = {k: prm[k] for k in ("delta", "delta_tilde", "C4", "C5", "c6", "c7", "C", "T0", "dt", "strict")
              if k in prm}
        for k in ("tau0", "tau1"):
            if k in prm:
                kw[k] = tuple(prm[k])
        if side == "model":
            return measure.check_measure_bounds(None, side="model", budget=budget, pp=fs.pp,
                                                domain=fs.domain, h=float(prm.get("h", 1 / 16)), **kw)
        traj = fs.trajectory()
        site = (prm["x0"], float(prm["t0"]), float(prm["r"]))
        rep = measure.check_measure_bounds(traj, site=site, side=side, budget=budget, **kw)
        if prm.get("scales"):
            p = fs.pp.p
            drift = 0.0
            for lam in prm["scales"]:
                s2 = (prm["x0"], site[1] * lam ** (2 - p), site[2])
                r2 = measure.check_measure_bounds(traj.scaled(lam), site=s2, side=side, **kw)
                drift = max(drift, abs(r2.fitted_constant - rep.fitted_constant) / abs(rep.fitted_constant))
            rep.details["scaling_drift"] = drift
        return rep
    fn.__doc__ = f"Boundary measure bound ({side})."
    return fn


register("measure_upper", needs=("data", "domain"))(_bounds("upper"))
register("measure_lower", needs=("data", "domain"))(_bounds("lower"))
register("measure_model", needs=("domain",))(_bounds("model"))


@register("measure_ordering", needs=("data", "data_b", "domain"))
def _ordering(fs, prm, budget, files):
    """Ordered fields give ordered boundary measures on non-negative bumps."""
    rep = measure.check_measure_ordering(fs.trajectory("data"), fs.trajectory("data_b"),
                                         window=tuple(prm["window"]) if "window" in prm else None,
                                         n_bumps=int(prm.get("n_bumps", 50)), r_max=prm.get("r_max"),
                                         seed=int(prm.get("seed", 0)))
    if budget is not None:
        rep.budget = float(budget)
    return rep


@register("measure_doubling", needs=("data", "domain"))
def _doubling(fs, prm, budget, files):
    """Doubling ratios of the boundary measure on shrinking radii."""
    traj = fs.trajectory()
    prof = measure.doubling_profile(traj, (prm["x"], float(prm["t"])), prm["rhos"],
                                    eps=float(prm.get("eps", 0.5)),
                                    window=tuple(prm["window"]) if "window" in prm else None)
    files["doubling.csv"] = _rows_writer(["rho", "ratio", "mass_big", "mass_small"],
                                         [(r, q, *m) for r, q, m in zip(prof.rhos, prof.ratios, prof.masses)])
    rtol = _budget(budget, 0.2)
    rep = prof.to_report(rtol)
    if not prof.monotone:
        rep.fitted_constant = math.inf
    return rep


def describe():
    """``(id, needs, doc)`` rows sorted by id."""
    return [(c.id, c.needs, c.doc) for c in sorted(REGISTRY.values(), key=lambda c: c.id)]


def timed(check, fs, params, budget=None):
    """Run one check; returns ``(report_or_None, error_or_None, files, runtime_ms)``."""
    files = {}
    t0 = time.perf_counter()
    try:
        rep = check(fs, params, budget, files)
        err = None
    except Exception as exc:  # embedded in the report
        rep, err = None, exc
    return rep, err, files, (time.perf_counter() - t0) * 1e3

