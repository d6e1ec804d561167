import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from pparabolic.closed_forms import (
    Frame,
    PParams,
    classify_region,
    eval_jet,
    evaluate,
    friendly_giant_coefficient,
    gradient_lower_bound,
    make_closed_form,
    p2_limit_distance,
    sample_region,
    values,
)
from pparabolic.errors import BadSequence, DegenerateExponent, NonSmoothPoint, OutOfRange, OutsideSupport


def sympy_cp(p):
    """Coefficient forced by substituting the separable ansatz."""
    x, t, T, c = sp.symbols("x t T c", positive=True)
    p = sp.Rational(p).limit_denominator(1000)
    u = c * (T - t) ** (-1 / (p - 2)) * x ** (p / (p - 2))
    ux = sp.diff(u, x)
    res = sp.diff(u, t) - sp.diff(ux ** (p - 1), x)
    eq = sp.simplify(res.subs({x: 1, t: 0, T: 1}))
    sols = [s for s in sp.solve(eq, c) if s.is_positive]
    return float(sols[0])


@pytest.mark.parametrize("p", [3.0, 2.5, 4.0, 6.0])
def test_friendly_giant_coefficient_matches_symbolic(p):
    assert friendly_giant_coefficient(p) == pytest.approx(sympy_cp(p), rel=1e-12)


def fd_residual(form, X, t, h=2e-5):
    """u_t - div(|grad u|^{p-2} grad u) from central differences of the jets."""
    p, n = form.pp.p, form.pp.n
    ut = (values(form, X, t + h) - values(form, X, t - h)) / (2 * h)
    div = np.zeros(len(X))
    for d in range(n):
        e = np.zeros(n)
        e[d] = h
        fp = evaluate(form, X + e, t).gradient
        fm = evaluate(form, X - e, t).gradient
        flux_p = np.linalg.norm(fp, axis=1) ** (p - 2) * fp[:, d]
        flux_m = np.linalg.norm(fm, axis=1) ** (p - 2) * fm[:, d]
        div += (flux_p - flux_m) / (2 * h)
    return ut - div


CASES = [
    ("FriendlyGiant", 3.0, 1, {"T": 1.0}),
    ("FriendlyGiant", 4.0, 2, {"T": 2.0}),
    ("Linear", 3.0, 2, {"slope": 2.0}),
    ("BarrierSub", 3.0, 1, {"a": 0.5}),
    ("BarrierSub", 2.5, 2, {"a": 0.3}),
    ("BarrierSuper", 3.0, 2, {"T": 1.0, "H": 1.0}),
    ("BarrierSuper", 4.0, 1, {"T": 0.5, "H": 2.0}),
    ("GaussianLimit", 2.0, 2, {}),
]


@pytest.mark.parametrize("family,p,n,params", CASES)
def test_residual_matches_finite_differences(family, p, n, params):
    form = make_closed_form(family, PParams(p, n), params)
    X, t = sample_region(form, n_samples=200, seed=3, collar=1e-2)
    b = evaluate(form, X, t)
    ok = b.status == 0
    fd = fd_residual(form, X[ok], t[ok])
    scale = np.maximum(1.0, np.abs(b.dt[ok]))
    assert np.max(np.abs(fd - b.residual[ok]) / scale) < 1e-4


@pytest.mark.parametrize("family,p,n,params", CASES)
def test_gradient_and_dt_match_finite_differences(family, p, n, params):
    form = make_closed_form(family, PParams(p, n), params)
    X, t = sample_region(form, n_samples=100, seed=5, collar=1e-2)
    b = evaluate(form, X, t)
    ok = b.status == 0
    h = 1e-6
    for d in range(n):
        e = np.zeros(n)
        e[d] = h
        fd = (values(form, X[ok] + e, t[ok]) - values(form, X[ok] - e, t[ok])) / (2 * h)
        assert np.allclose(fd, b.gradient[ok, d], rtol=1e-5, atol=1e-6)
    fdt = (values(form, X[ok], t[ok] + h) - values(form, X[ok], t[ok] - h)) / (2 * h)
    assert np.allclose(fdt, b.dt[ok], rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_subsolution_barrier_sign(p, n, a):
    c = classify_region(make_closed_form("BarrierSub", PParams(p, n), {"a": a}), n_samples=2000)
    assert c.kind in ("Subsolution", "Solution")
    assert c.max_residual <= 1e-10


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("T,H", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)])
def test_supersolution_barrier_sign(p, n, T, H):
    c = classify_region(make_closed_form("BarrierSuper", PParams(p, n), {"T": T, "H": H}), n_samples=2000)
    assert c.kind in ("Supersolution", "Solution")
    assert c.min_residual >= -1e-10


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
def test_friendly_giant_and_linear_are_solutions(p):
    for fam, par in (("FriendlyGiant", {"T": 1.0}), ("Linear", {"slope": 3.0})):
        c = classify_region(make_closed_form(fam, PParams(p, 1), par), n_samples=2000, tol=1e-8)
        assert c.kind == "Solution"


@given(p=st.floats(2.05, 6.0), lam=st.floats(0.2, 5.0), x=st.floats(0.05, 0.9), t=st.floats(0.0, 0.8))
def test_friendly_giant_intrinsic_scaling(p, lam, x, t):
    # lam u(x, lam^{p-2} t) is again a friendly giant with T / lam^{p-2}
    pp = PParams(p, 1)
    u = make_closed_form("FriendlyGiant", pp, {"T": 1.0})
    v = make_closed_form("FriendlyGiant", pp, {"T": lam ** (2 - p)})
    s = t * lam ** (2 - p)
    assert lam * values(u, [[x]], lam ** (p - 2) * s)[0] == pytest.approx(values(v, [[x]], s)[0], rel=1e-10)


def test_frame_places_the_form():
    pp = PParams(3.0, 2)
    base = make_closed_form("BarrierSub", pp, {"a": 0.5})
    moved = make_closed_form("BarrierSub", pp, {"a": 0.5}, Frame(center=(1.0, 2.0), scale=2.0, t_shift=0.1))
    X = np.array([[1.2, 0.1], [0.0, 1.3]])
    t = 0.2 * base["T"]
    lhs = values(moved, X * 2.0 + [1.0, 2.0], t * 2.0 ** 3 + 0.1)
    assert np.allclose(lhs, values(base, X, t))


def test_barrier_super_rejects_large_k():
    pp = PParams(3.0, 2)
    k0 = make_closed_form("BarrierSuper", pp, {"T": 1.0, "H": 1.0})["k0"]
    with pytest.raises(OutOfRange, match="k must lie"):
        make_closed_form("BarrierSuper", pp, {"T": 1.0, "H": 1.0, "k": 1.01 * k0})


@pytest.mark.parametrize("family", ["FriendlyGiant", "BarrierSub", "BarrierSuper"])
def test_degenerate_exponent(family):
    with pytest.raises(DegenerateExponent):
        make_closed_form(family, PParams(2.0, 1))


def test_unknown_parameter():
    with pytest.raises(OutOfRange):
        make_closed_form("Linear", PParams(3.0, 1), {"slop": 1.0})


def test_eval_jet_support_and_edges():
    form = make_closed_form("BarrierSub", PParams(3.0, 1), {"a": 0.5})
    j = eval_jet(form, [5.0], 0.1)
    assert j.outside and j.value == 0.0 and math.isnan(j.residual)
    with pytest.raises(OutsideSupport):
        eval_jet(form, [5.0], 0.1, strict=True)
    g = make_closed_form("GaussianLimit", PParams(2.0, 1))
    with pytest.raises(NonSmoothPoint):
        eval_jet(g, [1.0], 1e-15)


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_gradient_lower_bound_holds(p, a):
    obs, bound = gradient_lower_bound(make_closed_form("BarrierSub", PParams(p, 1), {"a": a}))
    assert obs >= bound


def test_p2_limit_is_strictly_decreasing():
    d = p2_limit_distance(0.5, 1, [3.0, 2.5, 2.1, 2.01])
    assert all(b < a for a, b in zip(d, d[1:]))


@pytest.mark.parametrize("seq", [[2.5, 3.0], [3.0, 2.0], []])
def test_p2_limit_bad_sequences(seq):
    with pytest.raises(BadSequence):
        p2_limit_distance(0.5, 1, seq)


def test_classify_needs_enough_samples():
    with pytest.raises(OutOfRange):
        classify_region(make_closed_form("Linear", PParams(3.0, 1)), n_samples=10)
