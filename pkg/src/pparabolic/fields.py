"""Uniform read access to trajectories and closed forms.

Estimate checks only ever ask for point values, infima/suprema/means over
balls at a fixed time and the time range of the data.  :class:`FieldView`
answers those questions for a solver :class:`~pparabolic.solver.Trajectory`
or for a :class:`~pparabolic.closed_forms.ClosedForm` sampled on grid
nodes.  Ball statistics use the grid nodes whose centers lie in the open
ball and in the closed domain, consistent with the solver grid.
"""

import numpy as np

from .closed_forms import ClosedForm, validity_region, values as cf_values
from .errors import OutOfRange
from .solver import INSIDE, Grid, Trajectory

__all__ = ["FieldView", "view", "default_time_range"]


def default_time_range(form):
    """Global time range of a closed form, in placed coordinates."""
    fr = form.frame
    sp = fr.scale ** form.pp.p
    if form.family == "FriendlyGiant":
        lo, hi = 0.0, form["T"]
    else:
        reg = validity_region(form)
        lo, hi = reg.t_lo, reg.t_hi
    return fr.t_shift + lo * sp, fr.t_shift + hi * sp


class FieldView:
    """Read-only view of a space-time field.

    Parameters
    ----------
    field : Trajectory or ClosedForm
    domain : Domain, optional
        Needed for closed forms.
    h : float, optional
        Node spacing used for ball statistics of closed forms.
    t_range : (float, float), optional
        Time range of a closed form (default: its natural range).
    grid : Grid, optional
        Reuse an existing grid for a closed form.
    lam : float
        Intrinsic rescaling ``v(x, t) = lam u(x, lam^{p-2} t)`` applied on
        top of the field.
    """

    def __init__(self, field, domain=None, h=None, t_range=None, grid=None, lam=1.0):
        self.field = field
        self.lam = float(lam)
        if isinstance(field, Trajectory):
            self.kind = "trajectory"
            self.grid = field.grid
            self.pp = field.pp
            lo, hi = field.t_start, field.t_end
        elif isinstance(field, ClosedForm):
            self.kind = "closed_form"
            self.pp = field.pp
            if grid is None:
                if domain is None or h is None:
                    raise OutOfRange("a closed form needs a domain and a node spacing")
                grid = Grid(domain, h)
            self.grid = grid
            lo, hi = t_range if t_range is not None else default_time_range(field)
        else:
            raise OutOfRange(f"cannot view {type(field).__name__} as a field")
        self._tscale = self.lam ** (2 - self.pp.p)
        self.t_start = float(lo) * self._tscale
        self.t_end = float(hi) * self._tscale
        self._ball_cache = {}
        self._closure = self.grid.sdist >= -1e-12 * max(1.0, self.grid.domain.scale)

    @property
    def domain(self):
        return self.grid.domain

    @property
    def p(self):
        return self.pp.p

    def scaled(self, lam):
        """The field ``lam u(x, lam^{p-2} t)``."""
        out = FieldView.__new__(FieldView)
        out.__dict__.update(self.__dict__)
        out.lam = self.lam * float(lam)
        out._tscale = out.lam ** (2 - self.pp.p)
        out.t_start = self.t_start * lam ** (2 - self.pp.p)
        out.t_end = self.t_end * lam ** (2 - self.pp.p)
        out._ball_cache = self._ball_cache
        return out

    def _check_time(self, t):
        span = max(1.0, abs(self.t_start), abs(self.t_end))
        if t < self.t_start - 1e-12 * span or t > self.t_end + 1e-12 * span:
            raise OutOfRange(f"t={t} outside the data range [{self.t_start}, {self.t_end}]")

    def nodal(self, t):
        """Values at all grid nodes at time t."""
        t = float(t)
        self._check_time(t)
        traw = t / self._tscale
        if self.kind == "trajectory":
            traw = min(max(traw, self.field.t_start), self.field.t_end)
            u, _ = self.field.at(traw)
        else:
            g = self.grid
            u = cf_values(self.field, g.X, traw)
            u = np.where(g.mask == INSIDE, u, np.where(g.sdist >= 0, u, 0.0))
        return self.lam * u

    def value(self, x, t):
        """Point value: exact for closed forms, multilinear for trajectories."""
        t = float(t)
        self._check_time(t)
        traw = t / self._tscale
        if self.kind == "trajectory":
            traw = min(max(traw, self.field.t_start), self.field.t_end)
            return self.lam * self.field.value(x, traw)
        x = np.atleast_1d(np.asarray(x, float)).reshape(1, -1)
        return self.lam * float(cf_values(self.field, x, traw)[0])

    def ball_nodes(self, center, radius):
        key = (tuple(np.round(np.atleast_1d(center), 15)), float(radius))
        idx = self._ball_cache.get(key)
        if idx is None:
            idx = self.grid.nodes_in_ball(center, radius, which=None)
            idx = idx[self._closure[idx]]
            self._ball_cache[key] = idx
        return idx

    def _ball(self, center, radius, t):
        idx = self.ball_nodes(center, radius)
        if len(idx) == 0:
            return np.array([self.value(center, t)])
        return self.nodal(t)[idx]

    def ball_inf(self, center, radius, t):
        return float(self._ball(center, radius, t).min())

    def ball_sup(self, center, radius, t):
        return float(self._ball(center, radius, t).max())

    def ball_mean(self, center, radius, t):
        return float(self._ball(center, radius, t).mean())

    def times_in(self, t_lo, t_hi, n=33):
        """Sample times covering ``[t_lo, t_hi]``.

        Trajectories use their snapshots inside the window plus the two
        endpoints; closed forms use ``n`` equispaced times.
        """
        t_lo, t_hi = float(t_lo), float(t_hi)
        if t_hi < t_lo:
            raise OutOfRange("empty time window")
        if self.kind == "trajectory":
            ts = self.field.times * self._tscale
            inner = ts[(ts > t_lo) & (ts < t_hi)]
            return np.unique(np.concatenate([[t_lo], inner, [t_hi]]))
        return np.linspace(t_lo, t_hi, n)

    def interior_nodes(self, center, radius):
        """Interior nodes in the open ball."""
        return self.grid.nodes_in_ball(center, radius, which=INSIDE)

    def interior_sup(self, center, radius, t_lo, t_hi, n=33):
        idx = self.interior_nodes(center, radius)
        if len(idx) == 0:
            return 0.0
        return max(float(self.nodal(t)[idx].max()) for t in self.times_in(t_lo, t_hi, n))

    def lateral_sup(self, center, radius, t_lo, t_hi, n=33):
        """Largest lateral value on ``B_radius(center)`` over a time window.

        Trajectories carry their lateral data on the boundary nodes; a
        closed form is evaluated at the boundary feet of those nodes.
        Only boundary nodes whose foot lies in the ball count.
        """
        g = self.grid
        b = g.boundary
        if len(b) == 0:
            return 0.0
        c = np.atleast_1d(np.asarray(center, float))
        sel = b[np.linalg.norm(g.foot[b] - c, axis=1) < radius]
        if len(sel) == 0:
            return 0.0
        out = 0.0
        for t in self.times_in(t_lo, t_hi, n):
            if self.kind == "trajectory":
                vals = self.nodal(t)[sel]
            else:
                vals = self.lam * cf_values(self.field, g.foot[sel], t / self._tscale)
            out = max(out, float(np.max(vals)))
        return out

    def box_inf(self, center, radius, t_lo, t_hi, n=33):
        return min(self.ball_inf(center, radius, t) for t in self.times_in(t_lo, t_hi, n))

    def box_sup(self, center, radius, t_lo, t_hi, n=33):
        return max(self.ball_sup(center, radius, t) for t in self.times_in(t_lo, t_hi, n))


def view(field, domain=None, h=None, t_range=None, grid=None):
    """Wrap ``field`` in a :class:`FieldView` unless it already is one."""
    if isinstance(field, FieldView):
        return field
    return FieldView(field, domain=domain, h=h, t_range=t_range, grid=grid)
