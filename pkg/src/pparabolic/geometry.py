"""Ball-condition domains, corkscrew points and intrinsic geometry.

Only shapes with an exact signed distance are supported: an interval,
a rectangle with quarter-circle fillets, a disc and an annulus.  Signed
distances are positive inside.
"""

from dataclasses import dataclass

import numpy as np

from .closed_forms import PParams
from .errors import NotOnBoundary, OutOfRange, RadiusTooLarge

__all__ = [
    "Domain",
    "Interval",
    "Rectangle",
    "Disc",
    "Annulus",
    "IntrinsicCylinder",
    "WaitingTime",
    "intrinsic_cylinder",
    "waiting_time",
    "st1pp_satisfied",
    "corkscrew",
    "exterior_corkscrew",
    "corkscrew_holds",
    "domain_from_spec",
]

BOUNDARY_TOL = 1e-12


class Domain:
    """Base class.

    Subclasses provide ``signed_distance``, ``project`` (nearest boundary
    point) and ``normal`` (inward unit normal at boundary points), plus
    ``bbox``, ``r0`` and ``M``.
    """

    n = 2
    r0 = 1.0
    M = 3.0

    def signed_distance(self, X):
        raise NotImplementedError

    def project(self, X):
        raise NotImplementedError

    def normal(self, Y):
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def boundary_samples(self, h):
        """Boundary points, inward normals and arclength weights at spacing ~h."""
        raise NotImplementedError

    def spec(self):
        raise NotImplementedError

    @property
    def scale(self):
        lo, hi = self.bbox()
        return float(np.max(np.asarray(hi) - np.asarray(lo)))

    def contains(self, X):
        return self.signed_distance(X) > 0

    def distance(self, x):
        """Scalar distance of one point to the boundary (negative outside)."""
        return float(self.signed_distance(np.reshape(np.asarray(x, float), (1, -1)))[0])

    def on_boundary(self, y, tol=BOUNDARY_TOL):
        return abs(self.distance(y)) <= tol * max(1.0, self.scale)

    def _pts(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if self.n > 1 else X.reshape(-1, 1)
        return X

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()})"


class Interval(Domain):
    """Open interval (a, b); r0 = (b - a)/2."""

    def __init__(self, a=0.0, b=1.0, M=3.0):
        if not b > a:
            raise OutOfRange("interval needs b > a")
        self.a, self.b = float(a), float(b)
        self.n = 1
        self.r0 = (self.b - self.a) / 2
        self.M = float(M)

    def signed_distance(self, X):
        x = self._pts(X)[:, 0]
        return np.minimum(x - self.a, self.b - x)

    def project(self, X):
        x = self._pts(X)[:, 0]
        mid = 0.5 * (self.a + self.b)
        return np.where(x <= mid, self.a, self.b)[:, None]

    def normal(self, Y):
        y = self._pts(Y)[:, 0]
        mid = 0.5 * (self.a + self.b)
        return np.where(y <= mid, 1.0, -1.0)[:, None]

    def bbox(self):
        return (self.a,), (self.b,)

    def boundary_samples(self, h=None):
        pts = np.array([[self.a], [self.b]])
        return pts, np.array([[1.0], [-1.0]]), np.ones(2)

    def spec(self):
        return {"shape": "interval", "a": self.a, "b": self.b}


class Disc(Domain):
    """Disc of radius R; r0 = R."""

    def __init__(self, center=(0.0, 0.0), R=1.0, M=3.0):
        if not R > 0:
            raise OutOfRange("disc radius must be positive")
        self.c = np.asarray(center, dtype=float)
        self.R = float(R)
        self.n = 2
        self.r0 = self.R
        self.M = float(M)

    def signed_distance(self, X):
        X = self._pts(X)
        return self.R - np.linalg.norm(X - self.c, axis=1)

    def _radial(self, X):
        d = X - self.c
        rho = np.linalg.norm(d, axis=1, keepdims=True)
        rho = np.where(rho > 0, rho, 1.0)
        u = d / rho
        u[np.all(d == 0, axis=1)] = (1.0, 0.0)
        return u

    def project(self, X):
        X = self._pts(X)
        return self.c + self.R * self._radial(X)

    def normal(self, Y):
        return -self._radial(self._pts(Y))

    def bbox(self):
        return tuple(self.c - self.R), tuple(self.c + self.R)

    def boundary_samples(self, h):
        m = max(16, int(np.ceil(2 * np.pi * self.R / h)))
        th = 2 * np.pi * (np.arange(m) + 0.5) / m
        u = np.column_stack([np.cos(th), np.sin(th)])
        return self.c + self.R * u, -u, np.full(m, 2 * np.pi * self.R / m)

    def spec(self):
        return {"shape": "disc", "center": list(map(float, self.c)), "R": self.R}


class Annulus(Domain):
    """Annulus R_in < |x - c| < R_out; r0 = min(R_in, (R_out - R_in)/2)."""

    def __init__(self, center=(0.0, 0.0), R_in=0.5, R_out=1.0, M=3.0):
        if not 0 < R_in < R_out:
            raise OutOfRange("annulus needs 0 < R_in < R_out")
        self.c = np.asarray(center, dtype=float)
        self.R_in, self.R_out = float(R_in), float(R_out)
        self.n = 2
        self.r0 = min(self.R_in, (self.R_out - self.R_in) / 2)
        self.M = float(M)

    def signed_distance(self, X):
        X = self._pts(X)
        rho = np.linalg.norm(X - self.c, axis=1)
        return np.minimum(rho - self.R_in, self.R_out - rho)

    def _radial(self, X):
        d = X - self.c
        rho = np.linalg.norm(d, axis=1, keepdims=True)
        u = d / np.where(rho > 0, rho, 1.0)
        u[np.all(d == 0, axis=1)] = (1.0, 0.0)
        return u, rho[:, 0]

    def project(self, X):
        X = self._pts(X)
        u, rho = self._radial(X)
        inner = rho - self.R_in < self.R_out - rho
        R = np.where(inner, self.R_in, self.R_out)
        return self.c + R[:, None] * u

    def normal(self, Y):
        Y = self._pts(Y)
        u, rho = self._radial(Y)
        inner = np.abs(rho - self.R_in) < np.abs(rho - self.R_out)
        return np.where(inner[:, None], u, -u)

    def bbox(self):
        return tuple(self.c - self.R_out), tuple(self.c + self.R_out)

    def boundary_samples(self, h):
        out = []
        for R, sgn in ((self.R_out, -1.0), (self.R_in, 1.0)):
            m = max(16, int(np.ceil(2 * np.pi * R / h)))
            th = 2 * np.pi * (np.arange(m) + 0.5) / m
            u = np.column_stack([np.cos(th), np.sin(th)])
            out.append((self.c + R * u, sgn * u, np.full(m, 2 * np.pi * R / m)))
        return tuple(np.concatenate(z) for z in zip(*out))

    def spec(self):
        return {"shape": "annulus", "center": list(map(float, self.c)),
                "R_in": self.R_in, "R_out": self.R_out}


class Rectangle(Domain):
    """Axis-aligned rectangle with corner fillets of radius ``fillet``.

    The fillet radius is also the ball-condition radius, so it must not
    exceed half the shorter side.
    """

    def __init__(self, lo=(0.0, 0.0), hi=(1.0, 1.0), fillet=0.25, M=3.0):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        size = self.hi - self.lo
        if np.any(size <= 0):
            raise OutOfRange("rectangle needs hi > lo")
        if not 0 < fillet <= size.min() / 2:
            raise OutOfRange("fillet must lie in (0, min side / 2]")
        self.fillet = float(fillet)
        self.n = 2
        self.r0 = self.fillet
        self.M = float(M)
        self._c = 0.5 * (self.lo + self.hi)
        self._core = 0.5 * size - self.fillet  # half sizes of the inner box

    def _outside_sd(self, X):
        q = np.abs(X - self._c) - self._core
        outer = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inner = np.minimum(np.max(q, axis=1), 0.0)
        return outer + inner - self.fillet, q

    def signed_distance(self, X):
        return -self._outside_sd(self._pts(X))[0]

    def _grad_out(self, X):
        # gradient of the outside signed distance (unit vector)
        q = np.abs(X - self._c) - self._core
        s = np.where(X - self._c >= 0, 1.0, -1.0)
        qp = np.maximum(q, 0.0)
        nrm = np.linalg.norm(qp, axis=1)
        g = np.zeros_like(X)
        corner = nrm > 0
        g[corner] = qp[corner] / nrm[corner, None]
        k = np.argmax(q, axis=1)
        side = ~corner
        g[side, :] = 0.0
        g[side, k[side]] = 1.0
        return g * s

    def project(self, X):
        X = self._pts(X)
        sd = self._outside_sd(X)[0]
        return X - sd[:, None] * self._grad_out(X)

    def normal(self, Y):
        return -self._grad_out(self._pts(Y))

    def bbox(self):
        return tuple(self.lo), tuple(self.hi)

    def boundary_samples(self, h):
        f = self.fillet
        cx, cy = self._c
        ax, ay = self._core
        pts, nrm, w = [], [], []
        # straight sides
        for (x0, y0, x1, y1, nx, ny) in (
            (cx - ax, self.lo[1], cx + ax, self.lo[1], 0.0, 1.0),
            (cx - ax, self.hi[1], cx + ax, self.hi[1], 0.0, -1.0),
            (self.lo[0], cy - ay, self.lo[0], cy + ay, 1.0, 0.0),
            (self.hi[0], cy - ay, self.hi[0], cy + ay, -1.0, 0.0),
        ):
            L = np.hypot(x1 - x0, y1 - y0)
            if L <= 0:
                continue
            m = max(1, int(np.ceil(L / h)))
            s = (np.arange(m) + 0.5) / m
            pts.append(np.column_stack([x0 + s * (x1 - x0), y0 + s * (y1 - y0)]))
            nrm.append(np.tile([nx, ny], (m, 1)))
            w.append(np.full(m, L / m))
        # fillets
        for sx in (-1, 1):
            for sy in (-1, 1):
                cc = np.array([cx + sx * ax, cy + sy * ay])
                m = max(4, int(np.ceil(0.5 * np.pi * f / h)))
                th0 = np.arctan2(sy, sx) - np.pi / 4
                th = th0 + 0.5 * np.pi * (np.arange(m) + 0.5) / m
                u = np.column_stack([np.cos(th), np.sin(th)])
                pts.append(cc + f * u)
                nrm.append(-u)
                w.append(np.full(m, 0.5 * np.pi * f / m))
        return np.concatenate(pts), np.concatenate(nrm), np.concatenate(w)

    def spec(self):
        return {"shape": "rectangle", "lo": list(map(float, self.lo)),
                "hi": list(map(float, self.hi)), "fillet": self.fillet}


def domain_from_spec(spec):
    """Build a domain from a plain dict (as found in scenario files)."""
    spec = dict(spec)
    shape = spec.pop("shape", None)
    M = spec.pop("M", None)
    kw = {} if M is None else {"M": float(M)}
    if shape == "interval":
        return Interval(spec.get("a", 0.0), spec.get("b", 1.0), **kw)
    if shape == "disc":
        return Disc(tuple(spec.get("center", (0.0, 0.0))), spec.get("R", 1.0), **kw)
    if shape == "annulus":
        return Annulus(tuple(spec.get("center", (0.0, 0.0))), spec.get("R_in", 0.5),
                       spec.get("R_out", 1.0), **kw)
    if shape == "rectangle":
        return Rectangle(tuple(spec.get("lo", (0.0, 0.0))), tuple(spec.get("hi", (1.0, 1.0))),
                         spec.get("fillet", 0.25), **kw)
    raise OutOfRange(f"unknown shape {shape!r}")


# ---------------------------------------------------------------------------
# intrinsic geometry


@dataclass(frozen=True)
class IntrinsicCylinder:
    center: tuple
    t: float
    radius: float
    level: float
    sign: str
    t_lo: float
    t_hi: float

    @property
    def length(self):
        return self.t_hi - self.t_lo


@dataclass(frozen=True)
class WaitingTime:
    tau: float
    provenance: str


def _p(pp):
    return pp.p if isinstance(pp, PParams) else float(pp)


def intrinsic_cylinder(x, t, r, lam, sign, pp):
    """Cylinder ``B_r(x) x (t - lam^{2-p} r^p, t)`` (sign '-') or its forward twin."""
    if not (r > 0 and lam > 0):
        raise OutOfRange("radius and level must be positive")
    if sign not in ("+", "-"):
        raise OutOfRange("sign must be '+' or '-'")
    p = _p(pp)
    length = lam ** (2 - p) * r ** p
    lo, hi = (t - length, t) if sign == "-" else (t, t + length)
    return IntrinsicCylinder(tuple(np.atleast_1d(np.asarray(x, float))), float(t), float(r),
                             float(lam), sign, float(lo), float(hi))


def waiting_time(u_val, r, C4, C5, pp, provenance="backward_chain"):
    """``tau = C4 (C5 u)^{2-p} r^p``."""
    if not (u_val > 0 and r > 0 and C4 > 0 and C5 > 0):
        raise OutOfRange("waiting time needs positive value, radius and constants")
    p = _p(pp)
    return WaitingTime(float(C4 * (C5 * u_val) ** (2 - p) * r ** p), provenance)


def st1pp_satisfied(u_val, dist, T, t, C0, pp, rtol=1e-9):
    """Whether ``T - t > C0 u^{2-p} d^p``.

    ``rtol`` widens the right-hand side by a relative margin so that exact
    ties (which occur for the friendly giant) are not decided by rounding.
    """
    p = _p(pp)
    if u_val <= 0:
        return False
    rhs = C0 * u_val ** (2 - p) * dist ** p
    return bool(T - t > rhs * (1 + rtol))


def corkscrew(domain, y, r, check=True):
    """Canonical interior corkscrew point ``y + (r/2) nu(y)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if check:
        if not domain.on_boundary(y):
            raise NotOnBoundary(f"{y} is not on the boundary")
        if not 0 < r < domain.r0:
            raise RadiusTooLarge(f"r={r} must lie in (0, r0={domain.r0})")
    nu = domain.normal(y.reshape(1, -1))[0]
    return y + 0.5 * r * nu


def exterior_corkscrew(domain, y, r):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not domain.on_boundary(y):
        raise NotOnBoundary(f"{y} is not on the boundary")
    if not 0 < r < domain.r0:
        raise RadiusTooLarge(f"r={r} must lie in (0, r0={domain.r0})")
    return y - 0.5 * r * domain.normal(y.reshape(1, -1))[0]


def corkscrew_holds(domain, y, r, a=None):
    """Check ``r/M < |a - y| < r`` and ``d(a) > r/M`` for the corkscrew point."""
    a = corkscrew(domain, y, r) if a is None else np.asarray(a, float)
    dist = float(np.linalg.norm(a - np.atleast_1d(y)))
    M = domain.M
    return (r / M < dist < r) and domain.distance(a) > r / M
