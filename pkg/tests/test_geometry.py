import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic.closed_forms import PParams, friendly_giant_coefficient, make_closed_form, values
from pparabolic.errors import NotOnBoundary, OutOfRange, RadiusTooLarge
from pparabolic.geometry import (
    Annulus,
    Disc,
    Interval,
    Rectangle,
    corkscrew,
    corkscrew_holds,
    domain_from_spec,
    exterior_corkscrew,
    intrinsic_cylinder,
    st1pp_satisfied,
    waiting_time,
)

SHAPES = [Interval(0.0, 1.0), Disc((0.0, 0.0), 1.0), Annulus((0.0, 0.0), 0.5, 1.0),
          Rectangle((0.0, 0.0), (1.0, 1.0), 0.25)]
IDS = ["interval", "disc", "annulus", "rectangle"]


def points(dom, seed, m=200):
    lo, hi = (np.asarray(b, float) for b in dom.bbox())
    rng = np.random.default_rng(seed)
    pad = 0.2 * (hi - lo)
    return rng.uniform(lo - pad, hi + pad, size=(m, dom.n))


@pytest.mark.parametrize("dom", SHAPES, ids=IDS)
@given(seed=st.integers(0, 10_000))
def test_signed_distance_is_1_lipschitz(dom, seed):
    X = points(dom, seed)
    d = dom.signed_distance(X)
    gap = np.abs(d[:, None] - d[None, :])
    dist = np.linalg.norm(X[:, None] - X[None, :], axis=2)
    assert np.all(gap <= dist + 1e-12)


@pytest.mark.parametrize("dom", SHAPES, ids=IDS)
@given(seed=st.integers(0, 10_000))
def test_projection_lands_on_boundary_at_distance(dom, seed):
    X = points(dom, seed, 50)
    Y = dom.project(X)
    assert np.allclose(dom.signed_distance(Y), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(X - Y, axis=1), np.abs(dom.signed_distance(X)), atol=1e-12)


@pytest.mark.parametrize("dom", SHAPES, ids=IDS)
def test_boundary_samples_and_normals(dom):
    Y, nu, w = dom.boundary_samples(0.01)
    assert np.allclose(dom.signed_distance(Y), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(nu, axis=1), 1.0)
    # moving inward along the normal increases the signed distance
    step = 1e-3 * dom.r0
    assert np.allclose(dom.signed_distance(Y + step * nu), step, rtol=1e-6)
    assert np.all(w > 0)


@pytest.mark.parametrize("dom", SHAPES, ids=IDS)
@pytest.mark.parametrize("frac", [0.01, 0.3, 0.99])
def test_corkscrew_conditions(dom, frac):
    Y, _, _ = dom.boundary_samples(0.05)
    for y in Y[:: max(1, len(Y) // 40)]:
        r = frac * dom.r0
        a = corkscrew(dom, y, r)
        assert corkscrew_holds(dom, y, r, a)
        assert dom.distance(a) == pytest.approx(r / 2, rel=1e-9)
        assert dom.distance(exterior_corkscrew(dom, y, r)) == pytest.approx(-r / 2, rel=1e-9)


def test_corkscrew_errors():
    dom = Disc()
    with pytest.raises(NotOnBoundary):
        corkscrew(dom, [0.5, 0.0], 0.1)
    with pytest.raises(RadiusTooLarge):
        corkscrew(dom, [1.0, 0.0], 1.5)


@pytest.mark.parametrize("spec", [d.spec() for d in SHAPES], ids=IDS)
def test_spec_round_trip(spec):
    dom = domain_from_spec(spec)
    assert dom.spec() == spec


def test_unknown_shape():
    with pytest.raises(OutOfRange):
        domain_from_spec({"shape": "torus"})


@given(lam=st.floats(0.1, 10.0), r=st.floats(0.01, 1.0), p=st.floats(2.0, 5.0))
def test_intrinsic_cylinder_length(lam, r, p):
    c = intrinsic_cylinder([0.0], 1.0, r, lam, "-", PParams(p, 1))
    assert c.length == pytest.approx(lam ** (2 - p) * r ** p, rel=1e-12)
    assert c.t_hi == 1.0
    f = intrinsic_cylinder([0.0], 1.0, r, lam, "+", PParams(p, 1))
    assert f.t_lo == 1.0 and f.length == pytest.approx(c.length, rel=1e-12)


def test_waiting_time_formula():
    w = waiting_time(2.0, 0.5, 3.0, 0.25, PParams(3.0, 1))
    assert w.tau == pytest.approx(3.0 * (0.25 * 2.0) ** -1 * 0.5 ** 3)


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
def test_st1pp_fails_on_friendly_giant_everywhere(p):
    # with C0 = c_p^{p-2} the condition is an exact tie for the friendly giant
    pp = PParams(p, 1)
    fg = make_closed_form("FriendlyGiant", pp, {"T": 1.0})
    C0 = friendly_giant_coefficient(p) ** (p - 2)
    for t in np.linspace(0, 0.9, 7):
        for x in np.geomspace(1e-3, 0.9, 15):
            u = values(fg, [[x]], t)[0]
            assert not st1pp_satisfied(u, x, 1.0, t, C0, pp)
            assert st1pp_satisfied(u, x, 1.0, t, 0.5 * C0, pp)
