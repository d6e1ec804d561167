import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pparabolic.closed_forms import PParams, make_closed_form
from pparabolic.geometry import Interval
from pparabolic.solver import Grid, build_problem, sample_closed_form, solve

settings.register_profile("pkg", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")


def bump1d(A=4.0, c=0.5, w=0.3):
    return lambda X: A * np.maximum(1 - ((X[:, 0] - c) / w) ** 2, 0) ** 2


@pytest.fixture(scope="session")
def bump_run():
    # p = 3 bump on (0, 1), dense snapshots for measure checks
    pp = PParams(3.0, 1)
    pr = build_problem(Interval(0, 1), pp, bump1d(), None, T=10.0, h=1 / 256)
    return solve(pr, np.linspace(0, 10, 201), dt=1e-4, growth=1.05, dt_max=0.01)


@pytest.fixture(scope="session")
def ordered_runs():
    pp = PParams(3.0, 1)
    g = Grid(Interval(0, 1), 1 / 128)
    out = []
    for init in (lambda X: bump1d(4, 0.5)(X) + bump1d(1, 0.3)(X), bump1d(3, 0.5)):
        pr = build_problem(g.domain, pp, init, None, T=4.0, grid=g)
        out.append(solve(pr, np.linspace(0, 4, 81), dt=1e-4, growth=1.05, dt_max=0.01))
    return out


@pytest.fixture(scope="session")
def linear_runs():
    g = Grid(Interval(0, 1), 1 / 256)
    ts = np.linspace(0, 1, 11)

    def make(p, slope):
        return sample_closed_form(make_closed_form("Linear", PParams(p, 1), {"slope": slope}), g, ts)
    return make


_DISC_CACHE = {}


def half_disc_run(h):
    """p = 3 bump in the unit disc with lateral data max(y, 0)^2 (vanishes on the lower arc)."""
    if h not in _DISC_CACHE:
        from pparabolic.geometry import Disc
        pp = PParams(3.0, 2)

        def lat(X, t):
            return np.maximum(X[:, 1], 0.0) ** 2

        def init(X):
            return 4 * np.maximum(1 - np.sum(X ** 2, 1) / 0.64, 0) ** 2 + lat(X, 0.0)
        pr = build_problem(Disc((0, 0), 1), pp, init, lat, T=20.0, h=h)
        snaps = np.concatenate([[0], np.geomspace(0.01, 20, 50)])
        _DISC_CACHE[h] = solve(pr, snaps, dt=0.002, growth=1.1)
    return _DISC_CACHE[h]


@pytest.fixture(scope="session")
def half_disc():
    return half_disc_run
