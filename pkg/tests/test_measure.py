import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic import measure
from pparabolic.errors import (ExtensionMissing, HypothesisViolation, MassTooSmall, NotVanishing,
                               OutOfRange, SupportViolation)
from pparabolic.closed_forms import PParams
from pparabolic.geometry import Interval
from pparabolic.measure import TestFunction, boundary_density, riesz_apply
from pparabolic.solver import build_problem, solve

# integral of (1 - s^2)^3 over (-1, 1)
PROFILE = 32 / 35


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
@pytest.mark.parametrize("slope", [0.5, 1.0, 2.0])
def test_linear_action_is_exact(linear_runs, p, slope):
    # u = slope x has boundary measure slope^{p-1} dt at x = 0
    tr = linear_runs(p, slope)
    phi = TestFunction([0.0], 0.5, 0.3, 0.4)
    mu, tol = riesz_apply(tr, phi, full=True)
    assert mu == pytest.approx(slope ** (p - 1) * PROFILE * 0.4, rel=1e-3)
    assert tol > 0


@given(p=st.sampled_from([2.0, 3.0, 4.0]), slope=st.floats(0.2, 3.0))
def test_slope_doubling_scales_by_power(linear_runs, p, slope):
    phi = TestFunction([0.05], 0.5, 0.25, 0.3)
    a = riesz_apply(linear_runs(p, slope), phi)
    b = riesz_apply(linear_runs(p, 2 * slope), phi)
    assert b / a == pytest.approx(2 ** (p - 1), rel=1e-9)


def test_interior_action_vanishes(linear_runs):
    tr = linear_runs(3.0, 1.0)
    mu, tol = riesz_apply(tr, TestFunction([0.5], 0.5, 0.3, 0.4), full=True)
    assert abs(mu) <= tol


@given(seed=st.integers(0, 10 ** 6))
def test_action_on_solver_output_is_non_negative(bump_run, seed):
    rng = np.random.default_rng(seed)
    c = rng.choice([0.0, 1.0]) + rng.uniform(-0.05, 0.05)
    tau = rng.uniform(0.1, 2.0)
    phi = TestFunction([c], rng.uniform(tau, 10 - tau), rng.uniform(0.05, 0.3), tau,
                       amplitude=rng.uniform(0.5, 2))
    mu, tol = riesz_apply(bump_run, phi, full=True)
    assert mu >= -tol


def test_density_matches_weak_action(bump_run):
    est = boundary_density(bump_run, (0.5, 10.0))
    assert np.all(est.density >= 0)
    rng = np.random.default_rng(1)
    for phi in measure._bump_family(bump_run.domain, (0.5, 10.0), 10, rng, 0.25):
        weak = riesz_apply(bump_run, phi)
        assert est.apply(phi) == pytest.approx(weak, rel=0.05, abs=1e-6)


def test_density_of_linear_is_slope_power(linear_runs):
    est = boundary_density(linear_runs(3.0, 2.0), (0.1, 0.9), strict=False)
    left = est.density_at(0.5, np.zeros((1, 1)), np.array([[1.0]]))
    assert left[0] == pytest.approx(4.0, rel=1e-9)


def test_ordering_of_ordered_solutions(ordered_runs):
    u, v = ordered_runs
    assert np.all(u.U >= v.U - 1e-12)
    rep = measure.check_measure_ordering(u, v, window=(0.2, 4.0), n_bumps=30)
    assert rep.details["violations"] == 0


def test_doubling_ratio_in_one_dimension(bump_run):
    prof = measure.doubling_profile(bump_run, ([0.0], 8.0), [0.5, 0.25, 0.125, 0.0625])
    assert prof.limit == 0.25
    assert prof.monotone and prof.converged(0.05)
    assert prof[-1] == pytest.approx(0.25, rel=0.01)


def test_support_violation(bump_run):
    with pytest.raises(SupportViolation):
        riesz_apply(bump_run, TestFunction([0.0], 9.9, 0.2, 0.5))


def test_extension_missing(linear_runs):
    # u = x does not vanish at x = 1
    with pytest.raises(ExtensionMissing):
        riesz_apply(linear_runs(3.0, 1.0), TestFunction([1.0], 0.5, 0.2, 0.3))


def test_not_vanishing(linear_runs):
    with pytest.raises(NotVanishing):
        boundary_density(linear_runs(3.0, 1.0), (0.1, 0.9))


def test_mass_too_small():
    # zero data carries no boundary mass
    pr = build_problem(Interval(0, 1), PParams(3.0, 1), 0.0, None, T=0.02, h=1 / 64)
    tr = solve(pr, np.linspace(0, 0.02, 5), dt=1e-3)
    with pytest.raises(MassTooSmall):
        measure.doubling_profile(tr, ([0.0], 0.02), [0.1])


@pytest.mark.parametrize("kw", [dict(eps=0.0), dict(site=([0.3], 8.0)), dict(rho_list=[5.0])])
def test_doubling_hypotheses(bump_run, kw):
    args = dict(site=([0.0], 8.0), rho_list=[0.5, 0.25])
    args.update(kw)
    with pytest.raises(HypothesisViolation):
        measure.doubling_profile(bump_run, **args)


def test_bounds_on_solver_output(bump_run):
    up = measure.check_measure_bounds(bump_run, site=([0.0], 3.0, 0.4), side="upper")
    lo = measure.check_measure_bounds(bump_run, site=([0.0], 3.0, 0.4), side="lower")
    assert up.to_dict()["pass"] and lo.to_dict()["pass"]
    assert up.fitted_constant > 0 and lo.fitted_constant > 0


def test_test_function_rejects_bad_radii():
    with pytest.raises(OutOfRange):
        TestFunction([0.0], 0.0, -1.0, 1.0)
    with pytest.raises(OutOfRange):
        TestFunction([0.0], 0.0, 1.0, 1.0, m=1)


def test_test_function_gradient_matches_finite_differences():
    phi = TestFunction([0.1, -0.2], 1.0, 0.7, 0.5, amplitude=1.5)
    X = np.array([[0.2, 0.1], [-0.3, -0.1]])
    e = 1e-6
    fd = np.stack([(phi.value(X + e * np.eye(2)[k], 1.1) - phi.value(X - e * np.eye(2)[k], 1.1)) / (2 * e)
                   for k in range(2)], 1)
    assert np.allclose(phi.grad(X, 1.1), fd, atol=1e-7)
    fdt = (phi.value(X, 1.1 + e) - phi.value(X, 1.1 - e)) / (2 * e)
    assert np.allclose(phi.dt(X, 1.1), fdt, atol=1e-7)
