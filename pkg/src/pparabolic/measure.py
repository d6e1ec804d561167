"""Boundary Riesz measure of a boundary-vanishing solution.

A non-negative solution that vanishes on part of the lateral boundary,
extended by zero across it, is a subsolution; the defect

    mu(phi) = int u phi_t - int |grad u|^{p-2} grad u . grad phi

is a non-negative measure carried by the lateral boundary.  The measure is
never materialised; it is accessed through its action on test functions
(:func:`riesz_apply`) and, on smooth shapes, through the surface density
``|grad u|^{p-1}`` (:func:`boundary_density`).  The two routes are
independent and are compared in the tests.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ExtensionMissing,
    HypothesisViolation,
    MassTooSmall,
    NotVanishing,
    OutOfRange,
    SupportViolation,
)
from .fields import view
from .geometry import corkscrew
from .reports import InequalityReport, jsonable
from .solver import INSIDE, Trajectory

__all__ = [
    "TestFunction",
    "MeasureEstimate",
    "DoublingProfile",
    "riesz_apply",
    "boundary_density",
    "check_measure_bounds",
    "check_measure_ordering",
    "doubling_profile",
    "model_problem",
    "QUAD_RTOL",
]

QUAD_RTOL = 1e-3
VANISH_TOL = 1e-6
N_TIME = 129


class TestFunction:
    """Tensor bump ``(1 - |x-c|^2/R^2)_+^m (1 - ((t-s)/tau)^2)_+^m``.

    Parameters
    ----------
    center : array_like
        Spatial center ``c``.
    s : float
        Temporal center.
    radius : float
        Spatial radius ``R``.
    tau : float
        Temporal radius.
    m : int
        Order of the profile, at least 2 so the bump is C^1.
    amplitude : float
    """

    __test__ = False

    def __init__(self, center, s, radius, tau, m=3, amplitude=1.0):
        if not (radius > 0 and tau > 0):
            raise OutOfRange("test function radii must be positive")
        if m < 2:
            raise OutOfRange("profile order must be at least 2")
        self.center = np.atleast_1d(np.asarray(center, float))
        self.s = float(s)
        self.radius = float(radius)
        self.tau = float(tau)
        self.m = int(m)
        self.amplitude = float(amplitude)

    @property
    def t_lo(self):
        return self.s - self.tau

    @property
    def t_hi(self):
        return self.s + self.tau

    def _space(self, X):
        X = np.asarray(X, float).reshape(-1, len(self.center))
        d = X - self.center
        q = 1 - np.sum(d * d, axis=1) / self.radius ** 2
        return d, np.maximum(q, 0.0)

    def _time(self, t):
        z = (t - self.s) / self.tau
        return z, max(1 - z * z, 0.0)

    def value(self, X, t):
        _, q = self._space(X)
        _, b = self._time(t)
        return self.amplitude * q ** self.m * b ** self.m

    def grad(self, X, t):
        d, q = self._space(X)
        _, b = self._time(t)
        m = self.m
        g = -2 * m / self.radius ** 2 * q ** (m - 1)
        return self.amplitude * b ** m * g[:, None] * d

    def dt(self, X, t):
        _, q = self._space(X)
        z, b = self._time(t)
        m = self.m
        return self.amplitude * q ** m * (-2 * m * z / self.tau * b ** (m - 1))

    def describe(self):
        return {"center": self.center.tolist(), "s": self.s, "radius": self.radius,
                "tau": self.tau, "m": self.m, "amplitude": self.amplitude}

    def __repr__(self):
        return f"TestFunction({self.describe()})"


def _trapezoid(ts):
    w = np.zeros(len(ts))
    d = np.diff(ts)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def _time_nodes(traj, lo, hi, n):
    # uniform nodes plus the snapshots inside; both map covariantly under rescaling
    ts = traj.times
    inner = ts[(ts > lo) & (ts < hi)]
    return np.unique(np.concatenate([np.linspace(lo, hi, n), inner]))


def _check_support(traj, phi):
    span = max(1.0, abs(traj.t_start), abs(traj.t_end))
    if phi.t_lo < traj.t_start - 1e-12 * span or phi.t_hi > traj.t_end + 1e-12 * span:
        raise SupportViolation(
            f"time support ({phi.t_lo}, {phi.t_hi}) leaves the data range "
            f"[{traj.t_start}, {traj.t_end}]")
    if len(phi.center) != traj.grid.n:
        raise SupportViolation("test function dimension differs from the grid")


def _support_ops(traj, phi):
    g = traj.grid
    G, centers, w = g.operators()
    rows = np.flatnonzero(np.linalg.norm(centers - phi.center, axis=1) < phi.radius)
    nodes = np.flatnonzero(np.linalg.norm(g.X - phi.center, axis=1) < phi.radius)
    return [Gd[rows] for Gd in G], centers[rows], w, nodes


def riesz_apply(traj, phi, n_time=N_TIME, full=False):
    """Action of the boundary measure on a test function.

    Space is integrated with node and face sums (the trapezoidal rule on
    the uniform grid), time with the trapezoidal rule on ``n_time``
    uniform nodes plus the snapshots inside the support.  Nodes that are
    not interior must carry zero, which is the extension by zero; face
    gradients next to the mask boundary are then one-sided.

    Parameters
    ----------
    traj : Trajectory
    phi : TestFunction
    n_time : int
    full : bool
        Also return the quadrature tolerance ``QUAD_RTOL`` times the
        integral of the absolute integrand.

    Returns
    -------
    float or (float, float)

    Raises
    ------
    SupportViolation
        The support leaves the data time range.  Space outside the grid
        needs no check: the padded grid covers the closure of the domain,
        and the zero extension vanishes beyond it.
    ExtensionMissing
        A non-interior node in the support carries a non-zero value.
    """
    if not isinstance(traj, Trajectory):
        raise OutOfRange("riesz_apply needs a Trajectory")
    _check_support(traj, phi)
    g = traj.grid
    p = traj.pp.p
    G, fc, w, nodes = _support_ops(traj, phi)
    outer = nodes[g.mask[nodes] != INSIDE]
    ts = _time_nodes(traj, phi.t_lo, phi.t_hi, n_time)
    tw = _trapezoid(ts)
    Xn = g.X[nodes]
    total = scale = 0.0
    for k, t in enumerate(ts):
        u, _ = traj.at(t)
        if len(outer):
            leak = np.max(np.abs(u[outer]))
            ref = np.max(np.abs(u[nodes])) if len(nodes) else 0.0
            if leak > VANISH_TOL * ref and leak > 0:
                raise ExtensionMissing(
                    f"non-interior node carries {leak:.3g} inside the support at t={t:.6g}")
        nodal = u[nodes] * phi.dt(Xn, t)
        gu = [Gd @ u for Gd in G]
        s = sum(c * c for c in gu)
        a = s ** ((p - 2) / 2) if p != 2 else np.ones_like(s)
        gphi = phi.grad(fc, t)
        flux = a * sum(c * gphi[:, d] for d, c in enumerate(gu))
        total += tw[k] * (g.weight * nodal.sum() - w * flux.sum())
        scale += tw[k] * (g.weight * np.abs(nodal).sum() + w * np.abs(flux).sum())
    if full:
        return float(total), float(QUAD_RTOL * scale)
    return float(total)


# ---------------------------------------------------------------------------
# surface density


def _interp(grid, u, P):
    """Multilinear interpolation of nodal values at many points."""
    f = (np.asarray(P, float) - grid.origin) / grid.h
    i0 = np.clip(np.floor(f).astype(int), 0, np.asarray(grid.dims) - 2)
    s = f - i0
    if grid.n == 1:
        i = i0[:, 0]
        return (1 - s[:, 0]) * u[i] + s[:, 0] * u[i + 1]
    U = u.reshape(grid.dims)
    i, j = i0[:, 0], i0[:, 1]
    a, b = s[:, 0], s[:, 1]
    return ((1 - a) * (1 - b) * U[i, j] + (1 - a) * b * U[i, j + 1]
            + a * (1 - b) * U[i + 1, j] + a * b * U[i + 1, j + 1])


def _normal_derivative(F, Y, nu, t, a):
    """Inward derivative at the boundary from samples at ``a, 2a, 3a``.

    Derivative at zero of the quadratic through the three samples.  The
    boundary value itself is not used: on a grid the discrete zero level
    sits up to a node spacing away from the exact boundary.
    """
    u = F.nodal(t)
    u1, u2, u3 = (_interp(F.grid, u, Y + k * a * nu) for k in (1, 2, 3))
    return (-5 * u1 + 8 * u2 - 3 * u3) / (2 * a)


@dataclass
class MeasureEstimate:
    """Surface density ``|d_nu u|^{p-1}`` on the lateral boundary.

    Attributes
    ----------
    window : (float, float)
        Time window on which the field vanishes laterally.
    points, normals, weights : ndarray
        Boundary samples, inward normals and arclength weights.
    times : ndarray
        Time samples of the stored table.
    density : ndarray, shape (len(times), len(points))
    applied : dict
        Values of :func:`riesz_apply` recorded through :meth:`record`.
    """

    field_view: object = field(repr=False)
    window: tuple
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    times: np.ndarray
    density: np.ndarray
    offset: float
    applied: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.field_view.p

    def density_at(self, t, points=None, normals=None):
        if points is None:
            points, normals = self.points, self.normals
        d = _normal_derivative(self.field_view, points, normals, t, self.offset)
        return np.abs(d) ** (self.p - 1)

    def _samples(self, center, radius):
        dom = self.field_view.domain
        step = min(self.field_view.grid.h, radius / 64)
        Y, nu, wt = dom.boundary_samples(step)
        sel = np.linalg.norm(Y - np.atleast_1d(center), axis=1) < radius
        return Y[sel], nu[sel], wt[sel]

    def _check_window(self, lo, hi):
        a, b = self.window
        span = max(1.0, abs(a), abs(b))
        if lo < a - 1e-12 * span or hi > b + 1e-12 * span:
            raise OutOfRange(f"({lo}, {hi}) leaves the density window ({a}, {b})")

    def box_mass(self, center, radius, t_lo, t_hi, n_time=65):
        """Measure of ``B_radius(center) x (t_lo, t_hi)`` from the density."""
        self._check_window(t_lo, t_hi)
        Y, nu, wt = self._samples(center, radius)
        if len(Y) == 0:
            return 0.0
        ts = np.linspace(t_lo, t_hi, n_time)
        tw = _trapezoid(ts)
        return float(sum(tw[k] * wt @ self.density_at(t, Y, nu) for k, t in enumerate(ts)))

    def apply(self, phi, n_time=N_TIME):
        """``int phi dmu`` from the density."""
        self._check_window(phi.t_lo, phi.t_hi)
        Y, nu, wt = self._samples(phi.center, phi.radius)
        if len(Y) == 0:
            return 0.0
        ts = np.linspace(phi.t_lo, phi.t_hi, n_time)
        tw = _trapezoid(ts)
        return float(sum(tw[k] * wt @ (phi.value(Y, t) * self.density_at(t, Y, nu))
                         for k, t in enumerate(ts)))

    def record(self, traj, phi):
        """Store ``riesz_apply(traj, phi)`` next to the density action."""
        val, tol = riesz_apply(traj, phi, full=True)
        self.applied[repr(phi)] = {"riesz": val, "density": self.apply(phi), "tol": tol}
        return val

    def to_csv(self, path):
        """Rows ``t, arclength, x..., density`` on the stored table."""
        Y = self.points
        arc = np.concatenate([[0.0], np.cumsum(self.weights)[:-1]])
        cols = ["t", "arclength"] + [f"x{d}" for d in range(Y.shape[1])] + ["density"]
        rows = []
        for k, t in enumerate(self.times):
            for j in range(len(Y)):
                rows.append([t, arc[j], *Y[j], self.density[k, j]])
        np.savetxt(path, np.array(rows), delimiter=",", header=",".join(cols), comments="")

    def to_dict(self):
        return jsonable({"window": list(self.window), "times": self.times,
                         "points": self.points, "density": self.density,
                         "applied": self.applied})


def boundary_density(traj, window, n_time=17, offset=None, strict=True):
    """Surface density of the boundary measure on a time window.

    The inward normal derivative at each boundary sample is extrapolated
    from values at distances ``a, 2a, 3a`` (``a`` one grid spacing in 1D,
    two in 2D so the interpolation stencils stay inside the domain).

    Raises
    ------
    NotVanishing
        The lateral trace on the window exceeds ``1e-6`` times the
        interior maximum (only when ``strict``).
    """
    F = view(traj)
    lo, hi = map(float, window)
    if not (F.t_start <= lo < hi <= F.t_end * (1 + 1e-12) + 1e-300):
        raise OutOfRange(f"window ({lo}, {hi}) outside the data range")
    g = F.grid
    big = 2 * g.domain.scale + 1
    trace = F.lateral_sup(np.zeros(g.n), big * 4, lo, hi)
    ref = F.interior_sup(np.zeros(g.n), big * 4, lo, hi)
    if strict and trace > VANISH_TOL * ref and trace > 0:
        raise NotVanishing(f"lateral trace {trace:.3g} against interior sup {ref:.3g}")
    if offset is None:
        offset = g.h if g.n == 1 else 2 * g.h
    Y, nu, wt = g.domain.boundary_samples(g.h)
    ts = np.linspace(lo, hi, n_time)
    est = MeasureEstimate(F, (lo, hi), Y, nu, wt, ts, np.empty((n_time, len(Y))), float(offset))
    est.density = np.array([est.density_at(t) for t in ts])
    return est


# ---------------------------------------------------------------------------
# bounds


def _site(F, site):
    x0, t0, r = site
    x0 = np.atleast_1d(np.asarray(x0, float))
    dom = F.domain
    if not dom.on_boundary(x0, tol=1e-9):
        raise HypothesisViolation("x0 on the boundary", f"d(x0)={dom.distance(x0)}")
    if not 0 < r <= dom.r0:
        raise HypothesisViolation("0 < r <= r0", f"r={r}, r0={dom.r0}")
    return x0, float(t0), float(r)


def _require_vanishing(F, x0, r, lo, hi, strict):
    trace = F.lateral_sup(x0, r, lo, hi)
    ref = F.interior_sup(x0, r, lo, hi)
    ok = trace <= VANISH_TOL * ref or trace == 0.0
    if not ok and strict:
        raise HypothesisViolation("vanishes on the lateral window", f"trace={trace}, sup={ref}")
    return bool(ok), trace


def _upper(traj, F, site, delta, delta_tilde, C4, C5, c6, c7, C, strict):
    x0, t0, r = _site(F, site)
    p, n = F.p, F.pp.n
    if not 0 < delta <= delta_tilde <= 1:
        raise HypothesisViolation("0 < delta <= delta_tilde <= 1",
                                  f"delta={delta}, delta_tilde={delta_tilde}")
    a = corkscrew(F.domain, x0, r, check=False)
    ua = F.value(a, t0)
    if not ua > 0:
        raise HypothesisViolation("u(a_r(x0), t0) > 0", f"u={ua}")
    tau = C4 / 16 * (C5 * ua) ** (2 - p) * r ** p
    e, et = delta ** (p - 1), delta_tilde ** (p - 1)
    if not t0 - F.t_start > 5 * et * tau:
        raise HypothesisViolation("t0 > 5 delta_tilde^(p-1) tau", f"t0={t0}, tau={tau}")
    if t0 > F.t_end * (1 + 1e-12):
        raise HypothesisViolation("t0 inside the data", f"t0={t0}")
    ok, trace = _require_vanishing(F, x0, r, t0 - 4 * et * tau, t0 - e * tau, strict)
    Q = (t0 - 2 * et * tau, t0 - e * tau)
    est = boundary_density(traj, Q, n_time=5, strict=False)
    mass = est.box_mass(x0, r / 2, *Q)
    lhs = mass / r ** n
    fitted = lhs / ua
    budget = C * (c6 / delta_tilde) ** ((p - 1) * c7 / delta)
    cfg = {"x0": x0.tolist(), "t0": t0, "r": r, "delta": delta, "delta_tilde": delta_tilde,
           "C4": C4, "C5": C5, "c6": c6, "c7": c7, "C": C, "p": p}
    return InequalityReport("measure_upper", lhs, ua, fitted, budget, cfg,
                            {"tau": tau, "Q": list(Q), "mass": mass, "corkscrew": a.tolist(),
                             "vanishing_window": [t0 - 4 * et * tau, t0 - e * tau],
                             "vanishes": ok, "trace": trace})


def _lower_one(traj, F, x0, t0, r, tau0, tau1, strict):
    p, n = F.p, F.pp.n
    a = corkscrew(F.domain, x0, r / 2, check=False)
    ua = F.value(a, t0)
    if not ua > 0:
        raise HypothesisViolation("u(A_r^-) > 0", f"u={ua}")
    L = ua ** (2 - p) * r ** p
    lo, hi = t0 - tau0 * L, t0 + (tau0 + tau1) * L
    if not (lo > F.t_start and hi < F.t_end):
        raise HypothesisViolation("time window inside the data",
                                  f"({lo}, {hi}) vs ({F.t_start}, {F.t_end})")
    ok, trace = _require_vanishing(F, x0, r, t0, hi, strict)
    Q = (t0 + tau0 * L, hi)
    est = boundary_density(traj, Q, n_time=5, strict=False)
    mass = est.box_mass(x0, r, *Q)
    rhs = mass / r ** n
    fitted = ua / rhs if rhs > 0 else math.inf
    return {"tau0": tau0, "tau1": tau1, "fitted": fitted, "u_A": ua, "mass": mass,
            "Q": list(Q), "corkscrew": a.tolist(), "vanishes": ok, "trace": trace}


def _lower(traj, F, site, tau0, tau1, budget, strict):
    x0, t0, r = _site(F, site)
    pairs = sorted(((float(a), float(b)) for a in np.atleast_1d(tau0) for b in np.atleast_1d(tau1)),
                   key=lambda ab: (ab[0] + ab[1], ab[0]))
    if any(a <= 0 or b <= 0 for a, b in pairs):
        raise HypothesisViolation("tau0, tau1 > 0", f"pairs={pairs}")
    rows, skipped = [], []
    for a, b in pairs:
        try:
            rows.append(_lower_one(traj, F, x0, t0, r, a, b, strict))
        except HypothesisViolation as exc:
            if len(pairs) == 1:
                raise
            skipped.append({"tau0": a, "tau1": b, "reason": str(exc)})
    if not rows:
        raise HypothesisViolation("some (tau0, tau1) pair meets the hypotheses",
                                  skipped[0]["reason"])
    passing = [row for row in rows if row["fitted"] <= budget]
    best = passing[0] if passing else min(rows, key=lambda row: row["fitted"])
    cfg = {"x0": x0.tolist(), "t0": t0, "r": r, "tau0": list(np.atleast_1d(tau0)),
           "tau1": list(np.atleast_1d(tau1)), "p": F.p}
    return InequalityReport("measure_lower", best["u_A"], best["mass"] / r ** F.pp.n,
                            best["fitted"], budget, cfg,
                            {"smallest_passing": [best["tau0"], best["tau1"]] if passing else None,
                             "sweep": rows, "skipped": skipped, **{k: best[k] for k in ("Q", "corkscrew", "vanishes")}})


def model_problem(pp, domain, h, T0=2.0, dt=None, scheme="implicit", n_snap=41):
    """Solve the model Dirichlet problem used by the lower bound.

    ``domain`` must have ``r0 >= 2`` and contain the origin on its
    boundary.  The solution lives in ``Omega cap B_2(0)``, starts from the
    indicator of ``B_{1/(4M)}(a_1(0))`` and vanishes laterally.

    Returns
    -------
    (Trajectory, dict)
    """
    from .solver import Grid, build_problem, solve

    o = np.zeros(domain.n)
    if not domain.on_boundary(o, tol=1e-9):
        raise HypothesisViolation("origin on the boundary", f"d(0)={domain.distance(o)}")
    if domain.r0 < 2:
        raise HypothesisViolation("r0 >= 2", f"r0={domain.r0}")
    a1 = corkscrew(domain, o, 1.0, check=False)
    rad = 1 / (4 * domain.M)
    if rad < 2 * h:
        raise OutOfRange(f"initial ball radius {rad} needs h <= {rad / 2}")
    grid = Grid(domain, h, clip=(o, 2.0))

    def initial(X):
        return (np.linalg.norm(X - a1, axis=1) < rad).astype(float)

    prob = build_problem(domain, pp, initial, None, T=T0, scheme=scheme, h=h, grid=grid)
    snaps = np.linspace(0, T0, n_snap)
    traj = solve(prob, snaps, dt=dt if dt is not None else T0 / 2000, growth=1.02, dt_max=T0 / 100)
    return traj, {"a1": a1.tolist(), "radius": rad, "T0": T0}


def _model(pp, domain, h, T0, budget, dt):
    traj, info = model_problem(pp, domain, h, T0=T0, dt=dt)
    est = boundary_density(traj, (0.0, T0), n_time=5, strict=False)
    o = np.zeros(domain.n)
    mass = est.box_mass(o, 2.0 - 4 * h, 0.0, T0, n_time=81)
    initial = float(traj.U[0].sum() * traj.grid.weight)
    fitted = 1 / mass if mass > 0 else math.inf
    cfg = {"p": pp.p, "n": pp.n, "h": h, "T0": T0, "domain": domain.spec(), "M": domain.M}
    return InequalityReport("measure_model", 1.0, mass, fitted, budget, cfg,
                            {"mass": mass, "initial_mass": initial, **info})


def check_measure_bounds(traj, site=None, side="upper", delta=0.5, delta_tilde=1.0, C4=1.0,
                         C5=1.0, c6=4.0, c7=1.0, C=1.0, tau0=(0.05, 0.1, 0.2), tau1=(0.1, 0.2, 0.4),
                         budget=None, strict=True, pp=None, domain=None, h=None, T0=2.0, dt=None):
    """Check an upper, lower or model-problem bound on the boundary measure.

    ``side="upper"``: ``mu(Q)/r^n <= fitted u(a_r(x0), t0)`` with
    ``tau = (C4/16) (C5 u(a_r))^{2-p} r^p`` and
    ``Q = B_{r/2}(x0) x (t0 - 2 dt^{p-1} tau, t0 - d^{p-1} tau)``; the budget
    is ``C (c6/dt)^{(p-1) c7/d}``.

    ``side="lower"``: ``u(A_r^-) <= fitted mu(Q)/r^n`` with
    ``A_r^- = (a_{r/2}(x0), t0)``, ``L = u(A_r^-)^{2-p} r^p`` and
    ``Q = B_r(x0) x (t0 + tau0 L, t0 + (tau0 + tau1) L)``.  ``tau0`` and
    ``tau1`` may be sequences; the smallest passing pair is reported.

    ``side="model"``: solves :func:`model_problem` (``traj`` is ignored)
    and fits ``1 / mass``.

    Raises
    ------
    HypothesisViolation
    """
    if side == "model":
        if pp is None or domain is None or h is None:
            raise OutOfRange("the model problem needs pp, domain and h")
        return _model(pp, domain, h, T0, 1e3 if budget is None else budget, dt)
    F = view(traj)
    if side == "upper":
        rep = _upper(traj, F, site, delta, delta_tilde, C4, C5, c6, c7, C, strict)
        if budget is not None:
            rep.budget = float(budget)
        return rep
    if side == "lower":
        return _lower(traj, F, site, tau0, tau1, 50.0 if budget is None else budget, strict)
    raise OutOfRange(f"unknown side {side!r}")


# ---------------------------------------------------------------------------
# ordering


def _bump_family(domain, window, n, rng, r_max):
    Y, _, _ = domain.boundary_samples(r_max / 8)
    lo, hi = window
    out = []
    for _ in range(n):
        y = Y[rng.integers(len(Y))]
        R = rng.uniform(0.25, 1.0) * r_max
        tau = rng.uniform(0.1, 0.5) * (hi - lo)
        s = rng.uniform(lo + tau, hi - tau)
        shift = rng.uniform(-0.5, 0.5, size=len(y)) * R
        out.append(TestFunction(y + shift, s, R, tau, m=3, amplitude=rng.uniform(0.5, 2.0)))
    return out


def check_measure_ordering(traj_u, traj_v, window=None, n_bumps=50, r_max=None, seed=0,
                           bumps=None):
    """Compare ``mu_u(phi)`` and ``mu_v(phi)`` for ordered fields ``u >= v``.

    A violation is ``mu_v(phi) > mu_u(phi) + tol`` with ``tol`` the sum of
    both quadrature tolerances.  The fitted constant is the number of
    violations and the budget is zero.
    """
    if traj_u.grid is not traj_v.grid and traj_u.grid.N != traj_v.grid.N:
        raise OutOfRange("ordered fields must share a grid")
    lo = max(traj_u.t_start, traj_v.t_start)
    hi = min(traj_u.t_end, traj_v.t_end)
    window = (lo, hi) if window is None else tuple(map(float, window))
    dom = traj_u.domain
    r_max = r_max if r_max is not None else 0.25 * dom.r0
    if bumps is None:
        bumps = _bump_family(dom, window, n_bumps, np.random.default_rng(seed), r_max)
    rows, worst = [], -math.inf
    for phi in bumps:
        mu, tu = riesz_apply(traj_u, phi, full=True)
        mv, tv = riesz_apply(traj_v, phi, full=True)
        gap = mv - mu
        worst = max(worst, gap - (tu + tv))
        rows.append({"mu_u": mu, "mu_v": mv, "tol": tu + tv, "violated": bool(gap > tu + tv)})
    viol = sum(row["violated"] for row in rows)
    cfg = {"n_bumps": len(bumps), "seed": seed, "window": list(window), "r_max": r_max}
    return InequalityReport("measure_ordering", worst, 0.0, float(viol), 0.0, cfg,
                            {"violations": viol, "rows": rows})


# ---------------------------------------------------------------------------
# doubling


@dataclass
class DoublingProfile:
    """Ratios ``mu(Q_{eps rho}) / mu(Q_rho)`` with ``Q_rho = B_rho(x) x (t - rho^2, t)``."""

    rhos: list
    ratios: list
    masses: list
    eps: float
    limit: float
    site: tuple

    @property
    def errors(self):
        return [abs(q / self.limit - 1) for q in self.ratios]

    @property
    def monotone(self):
        e = self.errors
        return all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(e, e[1:]))

    def converged(self, rtol=0.2):
        return len(self.ratios) >= 3 and self.monotone and self.errors[-1] <= rtol

    def __len__(self):
        return len(self.ratios)

    def __getitem__(self, k):
        return self.ratios[k]

    def to_report(self, rtol=0.2):
        fitted = self.errors[-1] if self.ratios else math.inf
        return InequalityReport("measure_doubling", self.ratios[-1], self.limit, fitted, rtol,
                                {"x": list(self.site[0]), "t": self.site[1], "eps": self.eps,
                                 "rhos": self.rhos},
                                {"ratios": self.ratios, "masses": self.masses,
                                 "errors": self.errors, "monotone": self.monotone,
                                 "converged": self.converged(rtol)})


def doubling_profile(traj, site, rho_list, eps=0.5, window=None, strict=True):
    """Doubling ratios of the boundary measure at a boundary point.

    Parameters
    ----------
    site : (x, t)
    rho_list : sequence of float
        Decreasing radii (dyadic in the intended use).
    eps : float in (0, 1]
    window : (float, float), optional
        Time window on which the field is known to be comparable to the
        distance; every box must lie inside it.

    Raises
    ------
    HypothesisViolation
        Bad site, radii or boxes outside the window.
    MassTooSmall
        A box mass is below the quadrature noise floor.
    """
    F = view(traj)
    x, t = site
    x = np.atleast_1d(np.asarray(x, float))
    t = float(t)
    if not 0 < eps <= 1:
        raise HypothesisViolation("0 < eps <= 1", f"eps={eps}")
    if not F.domain.on_boundary(x, tol=1e-9):
        raise HypothesisViolation("site on the boundary", f"d={F.domain.distance(x)}")
    rhos = [float(r) for r in rho_list]
    if not rhos or any(r <= 0 for r in rhos):
        raise HypothesisViolation("positive radii", f"rho={rhos}")
    lo, hi = window if window is not None else (F.t_start, F.t_end)
    top = max(rhos)
    if t - top ** 2 < lo or t > hi:
        raise HypothesisViolation("boxes inside the window",
                                  f"(t - rho^2, t)=({t - top ** 2}, {t}) vs ({lo}, {hi})")
    est = boundary_density(traj, (t - top ** 2, t), n_time=5, strict=strict)
    n = F.pp.n
    ratios, masses = [], []
    for rho in rhos:
        big = est.box_mass(x, rho, t - rho ** 2, t)
        small = est.box_mass(x, eps * rho, t - (eps * rho) ** 2, t)
        dmax = float(np.max(est.density_at(t, *est._samples(x, rho)[:2]), initial=0.0))
        floor = QUAD_RTOL * dmax * rho ** (n + 1)
        if not (small > floor and big > floor):
            raise MassTooSmall(f"box masses ({small:.3g}, {big:.3g}) at rho={rho} below {floor:.3g}")
        ratios.append(small / big)
        masses.append([big, small])
    return DoublingProfile(rhos, ratios, masses, float(eps), float(eps) ** (n + 1),
                           (x.tolist(), t))
