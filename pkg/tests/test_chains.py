import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic.chains import check_chain, check_chain_sweep, check_harnack, cover_curve, forward_schedule
from pparabolic.checks import sample_cover_config
from pparabolic.closed_forms import PParams, make_closed_form
from pparabolic.errors import GeometryViolation, HypothesisViolation, NoCurve, NTooSmall, OutOfRange
from pparabolic.fields import FieldView
from pparabolic.geometry import Annulus, Disc, Interval, Rectangle

SHAPES = [Interval(0.0, 1.0), Disc((0.0, 0.0), 1.0), Annulus((0.0, 0.0), 0.5, 1.0),
          Rectangle((0.0, 0.0), (1.0, 1.0), 0.25)]
IDS = ["interval", "disc", "annulus", "rectangle"]


@pytest.mark.parametrize("dom", SHAPES, ids=IDS)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_cover_invariants(dom, seed):
    x, y, r = sample_cover_config(dom, np.random.default_rng(seed))
    try:
        c = cover_curve(dom, x, y, r, int(2 ** 9 * dom.M))
    except HypothesisViolation:
        return  # below the resolution floor
    inv = c.invariants()
    assert inv == {"admissible": True, "consecutive": True, "dyadic": True}
    assert np.allclose(c.centers[0], x) and np.allclose(c.centers[-1], y)


def test_cover_needs_enough_balls():
    dom = Disc()
    x, y, r = sample_cover_config(dom, np.random.default_rng(0))
    with pytest.raises(NTooSmall):
        cover_curve(dom, x, y, r, 2 ** 9)


@pytest.mark.parametrize("k", [0, 1, 5, 40])
@pytest.mark.parametrize("c1", [0.1, 1.0, 3.0])
def test_schedule_p2_is_arithmetic(k, c1):
    s = forward_schedule(1.0, 0.7, k, c1, 2.0, PParams(2.0, 1))
    assert s.tau == c1 * (k + 1)
    assert np.allclose(np.diff(s.times), c1 * 0.7 ** 2)


@given(Lam=st.floats(0.1, 10), r=st.floats(0.01, 1), k=st.integers(0, 20), c1=st.floats(0.1, 2),
       c2=st.floats(1.1, 4), p=st.floats(2.0, 5.0))
def test_schedule_end_time(Lam, r, k, c1, c2, p):
    s = forward_schedule(Lam, r, k, c1, c2, p)
    assert s.times[-1] - s.times[0] == pytest.approx(s.tau * Lam ** (2 - p) * r ** p, rel=1e-12)
    assert np.all(np.diff(s.times) > 0)
    assert np.all(np.diff(s.levels) < 0)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1, 1.0, 2.0), (1.0, 1.0, 1, 1.0, 1.0), (1.0, 1.0, -1, 1.0, 2.0)])
def test_schedule_rejects(args):
    with pytest.raises(OutOfRange):
        forward_schedule(*args, 3.0)


@pytest.fixture(scope="module")
def giant_view():
    fg = make_closed_form("FriendlyGiant", PParams(3.0, 1), {"T": 1.0})
    return FieldView(fg, Interval(0, 1), 1 / 256)


@pytest.mark.parametrize("variant", ["intrinsic", "weak"])
@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_harnack_constant_is_scaling_invariant(giant_view, variant, lam):
    a = check_harnack(giant_view, [0.5], 0.5, 0.03, variant=variant)
    b = check_harnack(giant_view.scaled(lam), [0.5], 0.5 * lam ** (2 - 3.0), 0.03, variant=variant)
    assert a.passed
    assert b.fitted_constant == pytest.approx(a.fitted_constant, rel=1e-10)


def test_harnack_rejects_ball_leaving_domain(giant_view):
    with pytest.raises(GeometryViolation):
        check_harnack(giant_view, [0.05], 0.5, 0.03)


def test_chain_directions_on_disc(half_disc):
    F = FieldView(half_disc(1 / 32))
    r = 0.5
    fwd = check_chain(F, [0.0, -1 + r / 8], [0.0, -0.75], 0.05, r, 0.5, "forward_mean",
                      constants={"c3": 0.5})
    assert fwd.passed and fwd.fitted_constant > 0
    sweep = check_chain_sweep(F, [[0.0, -1 + r / 8], [0.0, -0.96]], [0.0, -0.75], 0.05, r,
                              constants={"c3": 0.5})
    # the envelope is non-decreasing as delta decreases
    deltas = [d for d, _ in sweep.details["envelope"]]
    vals = [v for _, v in sweep.details["envelope"]]
    assert deltas == sorted(deltas, reverse=True)
    assert vals == sorted(vals)


def test_chain_hypotheses(giant_view):
    with pytest.raises(HypothesisViolation):
        check_chain(giant_view, [0.02], [0.3], 0.1, 0.4, 1.5)
    with pytest.raises(HypothesisViolation):
        check_chain(giant_view, [0.02], [0.01], 0.1, 0.4, 1.0)
