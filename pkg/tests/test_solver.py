import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic.checks import _paired_run, random_ordered_pair
from pparabolic.closed_forms import PParams, make_closed_form, values
from pparabolic.errors import CflViolation, NegativeDataWhenNonNegDeclared, OutOfRange, ShapeMismatch
from pparabolic.geometry import Disc, Interval
from pparabolic.measure import TestFunction
from pparabolic.solver import (
    INSIDE,
    Grid,
    State,
    build_problem,
    cfl_bound,
    change_of_variables,
    diagnostics,
    export_trajectory,
    load_trajectory,
    sample_closed_form,
    solve,
    step,
)

from conftest import bump1d

GRID = Grid(Interval(0, 1), 1 / 32)


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
@given(seed=st.integers(0, 2 ** 32 - 1), p=st.sampled_from([2.0, 2.5, 3.0, 4.0]))
def test_comparison_and_l1_contraction(scheme, seed, p):
    rng = np.random.default_rng(seed)
    u0, v0 = random_ordered_pair(GRID, rng)
    Uu, Uv = _paired_run(GRID.domain, PParams(p, 1), GRID, u0, v0, 0.01, scheme)
    tol = (1e-12 if scheme == "explicit" else 1e-8) * max(1.0, v0.max())
    assert np.max(Uu - Uv) <= tol
    l1 = np.sum(np.abs(Uv - Uu), axis=1)
    assert np.all(np.diff(l1) <= tol * GRID.N)


@pytest.mark.parametrize("scheme", ["explicit", "implicit"])
def test_max_principle_and_mass_decay(scheme):
    pr = build_problem(Interval(0, 1), PParams(3.0, 1), bump1d(), None, T=0.05, scheme=scheme, h=1 / 64)
    tr = solve(pr, np.linspace(0, 0.05, 6), dt=1e-3)
    assert tr.U.min() >= -1e-12
    assert np.all(np.diff(tr.sup()) <= 1e-12)
    mass = tr.U[:, tr.grid.inside].sum(axis=1)
    assert np.all(np.diff(mass) <= 1e-12)


def test_friendly_giant_convergence():
    pp = PParams(3.0, 1)
    fg = make_closed_form("FriendlyGiant", pp, {"T": 1.0})
    errs = []
    for h in (1 / 32, 1 / 64):
        tr = solve(build_problem(Interval(0, 1), pp, fg, fg, T=0.5, scheme="explicit", h=h), [0, 0.5])
        ins = tr.grid.mask == INSIDE
        errs.append(np.max(np.abs(tr.U[-1] - values(fg, tr.grid.X, 0.5))[ins]))
    assert np.log2(errs[0] / errs[1]) > 0.8


def test_disc_implicit_run_stays_bounded():
    pr = build_problem(Disc(), PParams(3.0, 2), lambda X: np.maximum(1 - np.sum(X ** 2, 1) / 0.25, 0), None,
                       T=0.1, h=1 / 16)
    tr = solve(pr, [0, 0.05, 0.1], dt=0.01)
    assert tr.U.min() >= -1e-8 and tr.sup()[-1] < tr.sup()[0]


def test_cfl_violation():
    pr = build_problem(Interval(0, 1), PParams(3.0, 1), bump1d(), None, T=1.0, scheme="explicit", h=1 / 64)
    s = State(0.0, pr.initial.copy())
    with pytest.raises(CflViolation):
        step(s, 2 * cfl_bound(s.u, pr), pr)


def test_data_errors():
    dom = Interval(0, 1)
    with pytest.raises(NegativeDataWhenNonNegDeclared):
        build_problem(dom, PParams(3.0, 1), lambda X: -bump1d()(X), None, h=1 / 16)
    with pytest.raises(ShapeMismatch):
        build_problem(dom, PParams(3.0, 1), np.ones(5), None, h=1 / 16)
    with pytest.raises(OutOfRange):
        build_problem(dom, PParams(3.0, 1), 0.0, None, h=1 / 16, scheme="leapfrog")


def test_snapshots_are_hit_exactly():
    pr = build_problem(Interval(0, 1), PParams(3.0, 1), bump1d(), None, T=1.0, h=1 / 32)
    ts = [0, 0.013, 0.5, 1.0]
    tr = solve(pr, ts, dt=0.01, growth=1.3)
    assert np.array_equal(tr.times, ts)
    assert tr.meta["interpolated"] is False


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_export_round_trip(tmp_path, fmt):
    pr = build_problem(Disc(), PParams(3.0, 2), lambda X: np.maximum(1 - np.sum(X ** 2, 1), 0), None,
                       T=0.02, h=1 / 8)
    tr = solve(pr, [0, 0.01, 0.02], dt=0.005)
    path = export_trajectory(tr, str(tmp_path / f"traj.{fmt}"), fmt)
    back = load_trajectory(path)
    assert np.array_equal(back.times, tr.times)
    assert np.array_equal(back.U, tr.U)
    assert back.grid.N == tr.grid.N and back.pp == tr.pp


@given(lam=st.floats(0.2, 5.0))
def test_trajectory_scaling(lam):
    g = Grid(Interval(0, 1), 1 / 16)
    fg = make_closed_form("FriendlyGiant", PParams(3.0, 1), {"T": 1.0})
    tr = sample_closed_form(fg, g, [0.0, 0.5])
    s = tr.scaled(lam)
    assert np.allclose(s.times, tr.times / lam)
    assert np.allclose(s.U, lam * tr.U)


def test_weak_residual_small_for_solver_output(bump_run):
    phi = TestFunction([0.5], 5.0, 0.3, 4.5)
    d = diagnostics(bump_run, phi)
    # compare with the size of the individual terms of the weak form
    ref = diagnostics(bump_run, phi, C=1.0)
    assert abs(d["weak_residual"]) < 1e-2 * abs(ref["weak_residual"] - d["weak_residual"])


def test_change_of_variables_solves_reaction_equation(bump_run):
    C = 1.0
    w = change_of_variables(bump_run, C)
    phi = TestFunction([0.5], 0.5 * (w.t_start + w.t_end), 0.3, 0.45 * (w.t_end - w.t_start))
    with_reaction = diagnostics(w, phi, C)["weak_residual"]
    without = diagnostics(w, phi, 0.0)["weak_residual"]
    assert abs(with_reaction) < 2e-2 * abs(without)
    assert w.meta["reaction"] == C
    with pytest.raises(OutOfRange):
        change_of_variables(bump_run, -1.0)
