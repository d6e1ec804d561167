"""Desk-scale acceptance criteria.

Each test prints one ``[ACCEPTANCE k] PASS|FAIL`` line with its measured
quantities and runtime, then asserts the criterion including the runtime
limit.
"""

import math
import time

import numpy as np
import pytest
import sympy as sp

from pparabolic import chains, closed_forms, estimates, geometry, measure, solver
from pparabolic.checks import _paired_run, random_ordered_pair, sample_cover_config
from pparabolic.closed_forms import PParams, make_closed_form
from pparabolic.errors import HypothesisViolation

from conftest import bump1d


@pytest.fixture
def verdict(capsys):
    def report(k, title, ok, elapsed, limit, detail):
        ok = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\n[ACCEPTANCE {k}] {'PASS' if ok else 'FAIL'} {title}: {detail}; "
                  f"runtime {elapsed:.1f} s (limit {limit:g} s)")
        return ok
    return report


def test_1_barrier_residual_signs(verdict):
    t0 = time.perf_counter()
    bad, samples, configs = 0, [], 0
    for p in (2.1, 2.5, 3.0, 4.0):
        for n in (1, 2, 3):
            pp = PParams(p, n)
            for a in np.round(np.arange(0.1, 1.0, 0.1), 10):
                c = closed_forms.classify_region(make_closed_form("BarrierSub", pp, {"a": a}), n_samples=10_000)
                bad += c.kind not in ("Subsolution", "Solution")
                samples.append(c.n_samples)
                configs += 1
            for T, H in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.5)):
                k0 = make_closed_form("BarrierSuper", pp, {"T": T, "H": H})["k"]
                for k in (0.5 * k0, k0):
                    form = make_closed_form("BarrierSuper", pp, {"T": T, "H": H, "k": k})
                    c = closed_forms.classify_region(form, n_samples=10_000)
                    bad += c.kind not in ("Supersolution", "Solution")
                    samples.append(c.n_samples)
                    configs += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and min(samples) >= 10_000
    assert verdict(1, "barrier residual signs", ok, dt, 10,
                   f"{configs} configs, min {min(samples)} samples each, {bad} violations")


def test_2_friendly_giant_benchmark(verdict):
    t0 = time.perf_counter()
    # symbolic oracle for the coefficient at p = 3
    x, t, c = sp.symbols("x t c", positive=True)
    u = c * x ** 3 / (1 - t)
    eq = sp.simplify(sp.diff(u, t) - sp.diff(sp.diff(u, x) ** 2, x))
    c3 = [s for s in sp.solve(eq, c) if s != 0][0]
    coeff_ok = c3 == sp.Rational(1, 36) and closed_forms.friendly_giant_coefficient(3.0) == pytest.approx(1 / 36, rel=1e-14)
    pp = PParams(3.0, 1)
    fg = make_closed_form("FriendlyGiant", pp, {"T": 1.0})
    hs = [1 / 64, 1 / 128, 1 / 256]
    errs = []
    for h in hs:
        tr = solver.solve(solver.build_problem(geometry.Interval(0, 1), pp, fg, fg, T=0.5, scheme="explicit", h=h),
                          np.linspace(0, 0.5, 11))
        ins = tr.grid.mask == solver.INSIDE
        errs.append(max(float(np.max(np.abs(tr.U[k] - closed_forms.values(fg, tr.grid.X, s))[ins]))
                        for k, s in enumerate(tr.times)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    dt = time.perf_counter() - t0
    ok = coeff_ok and all(b < a for a, b in zip(errs, errs[1:])) and min(orders) >= 0.8
    assert verdict(2, "friendly-giant solver benchmark", ok, dt, 60,
                   f"c_3 = {c3}, sup errors {[f'{e:.2e}' for e in errs]}, orders {[round(o, 2) for o in orders]}")


def test_3_comparison_and_contraction(verdict):
    t0 = time.perf_counter()
    dom = geometry.Interval(0, 1)
    grid = solver.Grid(dom, 1 / 32)
    rng = np.random.default_rng(2024)
    tols = {"explicit": 1e-12, "implicit": 1e-8}
    viol = {s: 0 for s in tols}
    for i in range(1000):
        u0, v0 = random_ordered_pair(grid, rng)
        p = (2.0, 2.5, 3.0, 4.0)[i % 4]
        for s, tol in tols.items():
            Uu, Uv = _paired_run(dom, PParams(p, 1), grid, u0, v0, 0.01, s)
            tol = tol * max(1.0, float(v0.max()))
            l1 = np.sum(np.abs(Uv - Uu), axis=1)
            viol[s] += int(np.max(Uu - Uv) > tol) + int(np.max(np.diff(l1)) > tol * grid.N)
    dt = time.perf_counter() - t0
    assert verdict(3, "comparison principle and L1 contraction", sum(viol.values()) == 0, dt, 120,
                   f"1000 pairs, violations {viol}")


def _long_run(p, T, h=1 / 128):
    pr = solver.build_problem(geometry.Interval(0, 1), PParams(p, 1), bump1d(1, 0.5, 0.3), None, T=T, h=h)
    return solver.solve(pr, np.concatenate([[0], np.geomspace(1e-3, T, 120)]), dt=1e-4, growth=1.05)


def test_4_decay_exponents(verdict):
    t0 = time.perf_counter()
    rows = []
    # p = 2.5 uses a shorter horizon: sup u reaches the gradient floor eps by t ~ 1e6
    for p, T in ((2.5, 1e3), (3.0, 1e6), (4.0, 1e6)):
        fit = estimates.fit_decay_envelope(_long_run(p, T), "upper", regime="long", c2=10.0)
        rows.append((f"long p={p}", fit.fitted_exponent, fit.expected_exponent, fit.relative_error))
    pp = PParams(3.0, 1)
    tb = 1e-6
    pr = solver.build_problem(geometry.Interval(-1, 1), pp, lambda X: estimates.barenblatt(X, tb, pp), None,
                              T=3e-3, h=1 / 256, t0=tb)
    tr = solver.solve(pr, np.concatenate([[tb], np.geomspace(2e-6, 3e-3, 60)]), dt=1e-8, growth=1.05)
    fit = estimates.fit_decay_envelope(tr, "upper", regime="short", window=(1e-5, 3e-3))
    rows.append(("short n=1 p=3", fit.fitted_exponent, fit.expected_exponent, fit.relative_error))
    dt = time.perf_counter() - t0
    ok = all(r[3] <= 0.05 for r in rows)
    detail = ", ".join(f"{name}: {got:.4f} vs {want:.4f} ({err:.1e})" for name, got, want, err in rows)
    assert verdict(4, "decay exponents", ok, dt, 300, detail)


def test_5_bhp_counterexample(verdict):
    t0 = time.perf_counter()
    rep = estimates.bhp_counterexample(p=3.0)
    d = rep.details
    dt = time.perf_counter() - t0
    ok = d["lower_bound_fails"] and d["st1pp_false_everywhere"] and rep.to_dict()["pass"]
    assert verdict(5, "BHP counterexample", ok, dt, 10,
                   f"band infima {[f'{v:.2e}' for v in d['band_inf']]}, "
                   f"intrinsic condition false at all {d['points_checked']} points")


def test_6_carleson_harnack_stability(verdict, half_disc):
    t0 = time.perf_counter()
    fits = {}
    for h in (1 / 32, 1 / 64):
        F = half_disc(h)
        K = estimates.check_carleson(F, [0, -1], 5.0, 0.5).fitted_constant
        C = chains.check_harnack(F, [0, 0], 1.0, 0.1).fitted_constant
        fits[h] = (K, C)
    dK = abs(fits[1 / 64][0] / fits[1 / 32][0] - 1)
    dC = abs(fits[1 / 64][1] / fits[1 / 32][1] - 1)
    F = half_disc(1 / 32)
    drift = 0.0
    for lam in (0.5, 2.0, 3.7):
        G = F.scaled(lam)
        K = estimates.check_carleson(G, [0, -1], 5.0 / lam, 0.5).fitted_constant
        C = chains.check_harnack(G, [0, 0], 1.0 / lam, 0.1).fitted_constant
        drift = max(drift, abs(K / fits[1 / 32][0] - 1), abs(C / fits[1 / 32][1] - 1))
    dt = time.perf_counter() - t0
    ok = dK < 0.1 and dC < 0.1 and drift <= 1e-10
    assert verdict(6, "Carleson and Harnack stability", ok, dt, 300,
                   f"K {fits[1 / 32][0]:.4f} -> {fits[1 / 64][0]:.4f} ({dK:.1%}), "
                   f"C_h {fits[1 / 32][1]:.4f} -> {fits[1 / 64][1]:.4f} ({dC:.1%}), scaling drift {drift:.1e}")


def test_7_measure_suite(verdict, linear_runs, bump_run, ordered_runs):
    t0 = time.perf_counter()
    est = measure.boundary_density(linear_runs(3.0, 1.0), (0.1, 0.9), strict=False)
    dens = float(est.density_at(0.5, np.zeros((1, 1)), np.ones((1, 1)))[0])
    rep = measure.check_measure_ordering(*ordered_runs, window=(0.2, 4.0), n_bumps=50)
    prof = measure.doubling_profile(bump_run, ([0.0], 8.0), [0.5, 0.25, 0.125])
    dt = time.perf_counter() - t0
    ok = abs(dens - 1) <= 1e-3 and rep.details["violations"] == 0 and prof.converged(0.2)
    assert verdict(7, "measure suite", ok, dt, 300,
                   f"linear density {dens:.6f}, ordering violations {rep.details['violations']}/50, "
                   f"doubling ratios {[round(q, 4) for q in prof.ratios]} -> {prof.limit}")


def test_8_p2_stability(verdict):
    t0 = time.perf_counter()
    d = closed_forms.p2_limit_distance(0.5, 2, [3.0, 2.5, 2.1, 2.01])
    pr = solver.build_problem(geometry.Interval(0, 1), PParams(2.0, 1), bump1d(1, 0.5, 0.3), None, T=2.0, h=1 / 128)
    tr = solver.solve(pr, np.linspace(0, 2, 81), dt=1e-4, growth=1.05, dt_max=0.005)
    fit = estimates.fit_decay_envelope(tr, "upper", c2=0.05)
    dt = time.perf_counter() - t0
    ok = all(b < a for a, b in zip(d, d[1:])) and fit.r2 >= 0.99
    assert verdict(8, "p -> 2 stability", ok, dt, 60,
                   f"distances {[f'{v:.3e}' for v in d]}, exponential fit R^2 {fit.r2:.8f}")


def test_9_chain_geometry(verdict):
    t0 = time.perf_counter()
    shapes = [geometry.Interval(0.0, 1.0), geometry.Disc((0.0, 0.0), 1.0),
              geometry.Annulus((0.0, 0.0), 0.5, 1.0), geometry.Rectangle((0.0, 0.0), (1.0, 1.0), 0.25)]
    failures, rejected = {}, {}
    for dom in shapes:
        rng = np.random.default_rng(7)
        built = bad = skip = 0
        while built < 1000:
            x, y, r = sample_cover_config(dom, rng)
            try:
                cov = chains.cover_curve(dom, x, y, r, 2 ** 9 * dom.M)
            except HypothesisViolation:
                # below the resolution floor of N balls: not an admissible configuration
                skip += 1
                continue
            built += 1
            bad += not all(cov.invariants().values())
        failures[dom.spec()["shape"]] = bad
        rejected[dom.spec()["shape"]] = skip
    sched = 0.0
    for k in range(33):
        s = chains.forward_schedule(1.0, 1.0, k, 1.0, 2.0, 2.0)
        sched = max(sched, abs(s.tau - (k + 1)))
    dt = time.perf_counter() - t0
    ok = sum(failures.values()) == 0 and sched == 0.0
    assert verdict(9, "chain geometry", ok, dt, 30,
                   f"invariant failures {failures} over 1000 covers each (inadmissible draws skipped {rejected}), "
                   f"p=2 schedule error {sched}")
