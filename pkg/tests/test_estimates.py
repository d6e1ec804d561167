import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic import estimates
from pparabolic.closed_forms import PParams
from pparabolic.errors import HypothesisViolation, OutOfRange, WindowTooShort
from pparabolic.geometry import Interval
from pparabolic.solver import build_problem, solve

from conftest import bump1d


@pytest.fixture(scope="module")
def long_run():
    pr = build_problem(Interval(0, 1), PParams(3.0, 1), bump1d(1, 0.5, 0.3), None, T=1e6, h=1 / 128)
    snaps = np.concatenate([[0], np.geomspace(1e-3, 1e6, 120)])
    return solve(pr, snaps, dt=1e-4, growth=1.05)


@pytest.mark.parametrize("p,n", [(3.0, 1), (4.0, 1), (3.0, 2), (2.5, 2)])
def test_barenblatt_solves_equation(p, n):
    # finite-difference residual of u_t - div(|Du|^{p-2} Du) at interior points
    pp = PParams(p, n)
    t, e = 0.7, 1e-4
    rng = np.random.default_rng(0)
    X = rng.uniform(-0.3, 0.3, size=(20, n))

    def flux(Y, k):
        g = np.stack([(estimates.barenblatt(Y + e * np.eye(n)[j], t, pp)
                       - estimates.barenblatt(Y - e * np.eye(n)[j], t, pp)) / (2 * e) for j in range(n)], 1)
        return np.linalg.norm(g, axis=1) ** (p - 2) * g[:, k]

    div = sum((flux(X + e * np.eye(n)[k], k) - flux(X - e * np.eye(n)[k], k)) / (2 * e) for k in range(n))
    ut = (estimates.barenblatt(X, t + e, pp) - estimates.barenblatt(X, t - e, pp)) / (2 * e)
    assert np.max(np.abs(ut - div)) < 1e-4


@given(t=st.floats(1e-3, 1e3), C=st.floats(0.1, 10))
def test_barenblatt_peak(t, C):
    pp = PParams(3.0, 2)
    sig = 2 * (3 - 2) + 3
    peak = estimates.barenblatt(np.zeros((1, 2)), t, pp, C)[0]
    assert peak == pytest.approx(C ** 2 * t ** (-2 / sig), rel=1e-12)


def test_barenblatt_rejects_p2():
    with pytest.raises(OutOfRange):
        estimates.barenblatt(np.zeros((1, 1)), 1.0, PParams(2.0, 1))


def test_upper_decay_exponent(long_run):
    fit = estimates.fit_decay_envelope(long_run, "upper", c2=10.0)
    assert fit.expected_exponent == -1.0
    assert fit.relative_error < 0.01
    assert np.all(fit.values <= fit.envelope * (1 + 1e-9))


def test_lower_decay_envelope(long_run):
    anchor = {"center": [0.5], "radius": 0.5, "rho": 0.125}
    fit = estimates.fit_decay_envelope(long_run, "lower", anchor=anchor)
    assert 0 < fit.envelope_constant < 100
    assert np.all(fit.values >= fit.envelope * (1 - 1e-9))


def test_decay_window_too_short(long_run):
    with pytest.raises(WindowTooShort):
        estimates.fit_decay_envelope(long_run, "upper", window=(1.0, 1.001))


def test_short_time_decay_of_source_solution():
    pp = PParams(3.0, 1)
    tb = 1e-6
    pr = build_problem(Interval(-1, 1), pp, lambda X: estimates.barenblatt(X, tb, pp), None,
                       T=3e-3, h=1 / 256, t0=tb)
    tr = solve(pr, np.concatenate([[tb], np.geomspace(1e-5, 3e-3, 40)]), dt=1e-7, growth=1.05)
    fit = estimates.fit_decay_envelope(tr, "upper", regime="short", window=(1e-5, 3e-3))
    assert fit.expected_exponent == pytest.approx(-1 / 4)
    assert fit.relative_error < 0.02


def test_carleson_envelope_and_bound(half_disc):
    F = half_disc(1 / 32)
    rep = estimates.check_carleson(F, [0, -1], 5.0, 0.5, delta1=[0.5, 0.25, 0.125])
    env = [row["envelope"] for row in rep.details["sweep"]]
    assert env == sorted(env)
    assert rep.details["vanishes"]
    assert rep.fitted_constant <= rep.budget


@given(lam=st.floats(0.25, 4.0))
def test_carleson_intrinsic_scaling(half_disc, lam):
    F = half_disc(1 / 32)
    K = estimates.check_carleson(F, [0, -1], 5.0, 0.5).fitted_constant
    Ks = estimates.check_carleson(F.scaled(lam), [0, -1], 5.0 / lam, 0.5).fitted_constant
    assert Ks == pytest.approx(K, rel=1e-10)


@pytest.mark.parametrize("kw", [dict(x=[0, -0.5]), dict(r=5.0), dict(delta1=0.9, delta3=0.5),
                                dict(delta2=1.0), dict(lam=-1.0), dict(t=0.0)])
def test_carleson_hypotheses(half_disc, kw):
    args = dict(x=[0, -1], t=5.0, r=0.5)
    args.update(kw)
    with pytest.raises(HypothesisViolation):
        estimates.check_carleson(half_disc(1 / 32), **args)


def test_oscillation_decay(half_disc):
    rep = estimates.check_oscillation_decay(half_disc(1 / 32), [0, -1], 5.0, 0.5, 1.0)
    assert rep.to_dict()["pass"]
    assert rep.fitted_constant >= 1.0


def test_oscillation_decay_needs_sup_bound(half_disc):
    with pytest.raises(HypothesisViolation):
        estimates.check_oscillation_decay(half_disc(1 / 32), [0, -1], 5.0, 0.5, 1e-6)


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
def test_bhp_counterexample(p):
    rep = estimates.bhp_counterexample(p=p)
    d = rep.details
    assert d["lower_bound_fails"] and d["st1pp_false_everywhere"]
    assert rep.to_dict()["pass"]
    assert all(b < a for a, b in zip(d["band_inf"], d["band_inf"][1:]))


def test_global_bhp_is_symmetric(ordered_runs):
    u, v = ordered_runs
    a = estimates.check_boundary_harnack(u, v, C1bar=0.25, T_minus=0.5, T_plus=3.5)
    b = estimates.check_boundary_harnack(v, u, C1bar=0.25, T_minus=0.5, T_plus=3.5)
    assert a.fitted_constant == pytest.approx(b.fitted_constant, rel=1e-9)
    assert math.isfinite(a.fitted_constant) and a.fitted_constant >= 1.0


def test_bhp_unknown_scope(ordered_runs):
    with pytest.raises(OutOfRange):
        estimates.check_boundary_harnack(*ordered_runs, scope="sideways")
