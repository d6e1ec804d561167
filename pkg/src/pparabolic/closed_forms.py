"""Explicit solutions and barriers of the p-parabolic equation.

Each family is evaluated from closed formulas: value, spatial gradient,
time derivative and the residual ``u_t - div(|grad u|^{p-2} grad u)``.
No numerical differentiation is involved, so residual signs can be
asserted exactly.

Families
--------
FriendlyGiant
    ``c_p (T - t)^{-1/(p-2)} x_n^{p/(p-2)}``, the separable solution that
    vanishes on ``{x_n = 0}`` and blows up at ``t = T``.
Linear
    ``A x_n``, a stationary solution.
BarrierSub
    ``g(|x|, t) - g(rho0, t)`` on the shell ``1 < |x| < rho0``, a
    subsolution for ``0 < t < T = (n^{p-1} p)^{-1}``.
BarrierSuper
    ``H e^2 (1 - exp((t - T)/T - (|x| - 1)/k))`` on ``1 < |x| < 1 + k``,
    a supersolution for ``k <= k0``.
GaussianLimit
    ``exp(-(|x|^2 - 1)/(4t)) - exp(-1/(4t))``, the ``p -> 2`` limit of
    BarrierSub (a heat subsolution for ``t < 1/(2n)``).
"""

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import (
    BadSequence,
    DegenerateExponent,
    EmptyRegion,
    NonSmoothPoint,
    OutOfRange,
    OutsideSupport,
)

__all__ = [
    "PParams",
    "Frame",
    "ClosedForm",
    "Jet",
    "JetBatch",
    "Region",
    "Classification",
    "FAMILIES",
    "friendly_giant_coefficient",
    "make_closed_form",
    "evaluate",
    "values",
    "eval_jet",
    "validity_region",
    "sample_region",
    "classify_region",
    "gradient_lower_bound",
    "p2_limit_distance",
]

FAMILIES = ("FriendlyGiant", "Linear", "BarrierSub", "BarrierSuper", "GaussianLimit")

# status codes of JetBatch
OK, OUTSIDE, NONSMOOTH = 0, 1, 2

EDGE_TOL = 1e-12


@dataclass(frozen=True)
class PParams:
    """Exponent ``p`` and spatial dimension ``n``."""

    p: float
    n: int = 1

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 2:
            raise OutOfRange(f"p must be >= 2, got {self.p}")
        if int(self.n) != self.n or self.n < 1:
            raise OutOfRange(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True)
class Frame:
    """Affine placement ``x_local = R^T (x - center) / scale``.

    Time is mapped by ``t_local = (t - t_shift) / scale**p`` so the
    placed field is again a (sub/super)solution.  ``direction`` is the
    unit vector playing the role of ``e_n`` for the half-space families.
    """

    center: tuple = ()
    scale: float = 1.0
    direction: tuple = ()
    t_shift: float = 0.0


@dataclass(frozen=True)
class ClosedForm:
    family: str
    pp: PParams
    params: MappingProxyType
    frame: Frame

    def __getitem__(self, key):
        return self.params[key]

    def describe(self):
        d = {"family": self.family, "p": self.pp.p, "n": self.pp.n}
        d.update({k: float(v) for k, v in self.params.items()})
        return d


@dataclass(frozen=True)
class Jet:
    value: float
    gradient: np.ndarray
    dt: float
    residual: float
    outside: bool = False


@dataclass
class JetBatch:
    value: np.ndarray
    gradient: np.ndarray
    dt: np.ndarray
    residual: np.ndarray
    status: np.ndarray


@dataclass(frozen=True)
class Region:
    """Sampled space-time region in local (unframed) coordinates.

    ``kind='box'``: ``x_n`` in ``(lo, hi)``, other coordinates in
    ``(-width, width)``.  ``kind='shell'``: ``|x|`` in ``(lo, hi)``.
    """

    kind: str
    lo: float
    hi: float
    t_lo: float
    t_hi: float
    width: float = 1.0


@dataclass
class Classification:
    kind: str
    max_residual: float
    min_residual: float
    worst_residual: float
    worst_x: np.ndarray
    worst_t: float
    n_samples: int


def friendly_giant_coefficient(p):
    """Coefficient c_p making the separable profile an exact solution."""
    if p <= 2:
        raise DegenerateExponent("friendly giant needs p > 2")
    cp_pm2 = (p - 2) ** (p - 1) / (2 * (p - 1) * p ** (p - 1))
    return cp_pm2 ** (1.0 / (p - 2))


def _sub_constants(p, n, a):
    T = 1.0 / (n ** (p - 1) * p)
    rho0 = min(a * p / (n * (p - 2)) + 1.0, 2.0) ** ((p - 1) / p)
    return T, rho0


def make_closed_form(family, pp, params=None, frame=None):
    """Construct a closed form with its derived constants populated.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    pp : PParams
    params : dict, optional
        FriendlyGiant: ``T`` (default 1), ``length`` (default 1).
        Linear: ``slope`` (default 1).
        BarrierSub: ``a`` in (0, 1).
        BarrierSuper: ``T``, ``H`` (> 0), ``k`` (default ``k0``).
        GaussianLimit: none.
    frame : Frame, optional

    Returns
    -------
    ClosedForm
    """
    if family not in FAMILIES:
        raise OutOfRange(f"unknown family {family!r}")
    params = dict(params or {})
    p, n = pp.p, pp.n
    if family != "GaussianLimit" and family != "Linear" and p <= 2:
        raise DegenerateExponent(f"{family} needs p > 2, got p={p}")
    out = {}
    if family == "FriendlyGiant":
        T = float(params.get("T", 1.0))
        if not T > 0:
            raise OutOfRange("T must be positive")
        out = {"T": T, "c": friendly_giant_coefficient(p),
               "length": float(params.get("length", 1.0))}
    elif family == "Linear":
        out = {"slope": float(params.get("slope", 1.0))}
    elif family == "BarrierSub":
        a = float(params.get("a", 0.5))
        if not 0 < a < 1:
            raise OutOfRange(f"a must lie in (0,1), got {a}")
        T, rho0 = _sub_constants(p, n, a)
        out = {"a": a, "T": T, "rho0": rho0}
    elif family == "BarrierSuper":
        T = float(params.get("T", 1.0))
        H = float(params.get("H", 1.0))
        if not (T > 0 and H > 0):
            raise OutOfRange("T and H must be positive")
        k0 = min((p - 1) / n, T ** (1 / (p - 1)) * H ** ((p - 2) / (p - 1)))
        k = float(params.get("k", k0))
        if not 0 < k <= k0 * (1 + 1e-14):
            raise OutOfRange(f"k must lie in (0, k0={k0}], got {k}")
        out = {"T": T, "H": H, "k": min(k, k0), "k0": k0}
    elif family == "GaussianLimit":
        out = {"T": 1.0 / (2 * n), "rho0": np.sqrt(2.0)}
    unknown = set(params) - set(out)
    if unknown:
        raise OutOfRange(f"unknown parameters for {family}: {sorted(unknown)}")
    frame = _normalize_frame(frame, n)
    return ClosedForm(family, pp, MappingProxyType(out), frame)


def _normalize_frame(frame, n):
    if frame is None:
        frame = Frame()
    center = tuple(float(c) for c in frame.center) or (0.0,) * n
    direction = tuple(float(c) for c in frame.direction) or (0.0,) * (n - 1) + (1.0,)
    if len(center) != n or len(direction) != n:
        raise OutOfRange("frame center/direction must have length n")
    d = np.asarray(direction)
    nrm = np.linalg.norm(d)
    if nrm == 0 or frame.scale <= 0:
        raise OutOfRange("frame needs a nonzero direction and positive scale")
    return Frame(center, float(frame.scale), tuple(d / nrm), float(frame.t_shift))


# ---------------------------------------------------------------------------
# evaluation


def _prepare(form, X, t):
    n = form.pp.n
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != n:
        if n == 1 and X.shape[0] == 1:
            X = X.T
        else:
            raise OutOfRange(f"points must have {n} columns")
    t = np.broadcast_to(np.asarray(t, dtype=float), (X.shape[0],)).copy()
    fr = form.frame
    s = fr.scale
    Y = (X - np.asarray(fr.center)) / s
    tl = (t - fr.t_shift) / s ** form.pp.p
    return X, Y, tl


def evaluate(form, X, t):
    """Vectorized jets at points ``X`` (shape (m, n)) and times ``t``.

    Returns
    -------
    JetBatch
        ``status`` is 0 for smooth points, 1 outside the support (value 0,
        residual nan) and 2 on a truncation edge or corner (value set,
        residual nan).
    """
    X, Y, tl = _prepare(form, X, t)
    fam = form.family
    if fam in ("FriendlyGiant", "Linear"):
        e = np.asarray(form.frame.direction)
        xn = Y @ e
        v, d1, dt, res, st = _half_space(form, xn, tl)
        grad_loc = d1[:, None] * e[None, :]
    else:
        r = np.linalg.norm(Y, axis=1)
        if fam == "BarrierSub":
            v, d1, dt, res, st = _barrier_sub(form, r, tl)
        elif fam == "BarrierSuper":
            v, d1, dt, res, st = _barrier_super(form, r, tl)
        else:
            v, d1, dt, res, st = _gaussian(form, r, tl)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[:, None] > 0, Y / np.where(r > 0, r, 1.0)[:, None], 0.0)
        grad_loc = d1[:, None] * unit
    s, p = form.frame.scale, form.pp.p
    return JetBatch(v, grad_loc / s, dt / s ** p, res / s ** p, st)


def values(form, X, t):
    """Values only; outside the support the value is 0."""
    return evaluate(form, X, t).value


def eval_jet(form, x, t, strict=False):
    """Jet at a single point.

    Raises
    ------
    NonSmoothPoint
        On a truncation edge or at the corner ``|x| = 1, t = 0``.
    OutsideSupport
        Only when ``strict``; otherwise a flagged jet with value 0 and
        residual nan is returned.
    """
    b = evaluate(form, np.reshape(np.asarray(x, dtype=float), (1, -1)), t)
    st = int(b.status[0])
    if st == NONSMOOTH:
        raise NonSmoothPoint(f"{form.family}: point {x}, t={t} is on a truncation edge or corner")
    if st == OUTSIDE:
        if strict:
            raise OutsideSupport(f"{form.family}: point {x}, t={t} outside support")
        return Jet(0.0, np.zeros(form.pp.n), 0.0, float("nan"), True)
    return Jet(float(b.value[0]), b.gradient[0].copy(), float(b.dt[0]), float(b.residual[0]))


def _half_space(form, xn, t):
    m = xn.size
    st = np.zeros(m, dtype=int)
    if form.family == "Linear":
        A = form["slope"]
        return A * xn, np.full(m, A), np.zeros(m), np.zeros(m), st
    p = form.pp.p
    T, c = form["T"], form["c"]
    alpha = 1.0 / (p - 2)
    b = p / (p - 2)
    inside = (xn >= 0) & (t < T)
    st[~inside] = OUTSIDE
    s = np.where(inside, T - t, 1.0)
    x = np.where(inside, xn, 0.0)
    amp = c * s ** (-alpha)
    v = amp * x ** b
    ux = amp * b * x ** (b - 1)
    ut = alpha * v / s
    # (|u_x|^{p-2} u_x)_x collapses to a multiple of x^b
    lap = (p - 1) * (amp * b) ** (p - 2) * amp * b * (b - 1) * x ** b
    res = ut - lap
    res = np.where(inside, res, np.nan)
    return np.where(inside, v, 0.0), np.where(inside, ux, 0.0), np.where(inside, ut, 0.0), res, st


def _sub_arg(r, t, p):
    q = p / (p - 1)
    kappa = (p - 2) / p ** q
    return 1.0 - kappa * (r ** q - 1.0) / t ** (1.0 / (p - 1))


def _barrier_sub(form, r, t):
    p, n = form.pp.p, form.pp.n
    T, rho0 = form["T"], form["rho0"]
    q = p / (p - 1)
    beta = (p - 1) / (p - 2)
    m = r.size
    st = np.zeros(m, dtype=int)
    inside = (r >= 1.0) & (r <= rho0) & (t > 0) & (t <= T)
    st[~inside] = OUTSIDE
    tt = np.where(inside, t, 1.0)
    rr = np.where(inside, r, 1.0)
    arg = _sub_arg(rr, tt, p)
    arg0 = _sub_arg(rho0, tt, p)
    g = np.maximum(arg, 0.0) ** beta
    g0 = np.maximum(arg0, 0.0) ** beta
    g1 = g ** (1.0 / (p - 1))
    g01 = g0 ** (1.0 / (p - 1))
    value = g - g0
    dr = -((rr * g) / (p * tt)) ** (1.0 / (p - 1))
    gt = p ** (-q) * (rr ** q - 1.0) / tt ** q * g1
    gt0 = p ** (-q) * (rho0 ** q - 1.0) / tt ** q * g01
    dt = gt - gt0
    # residual of h, written without cancellation of the r^q/t^q terms
    res = g1 * (n / (p * tt) * g ** ((p - 2) / (p - 1)) - (p * tt) ** (-q)) - gt0
    edge = (np.abs(arg) <= EDGE_TOL) | (np.abs(arg0) <= EDGE_TOL)
    corner = (np.abs(rr - 1.0) <= EDGE_TOL) & (tt <= EDGE_TOL)
    bad = inside & (edge | corner)
    st[bad] = NONSMOOTH
    res = np.where(inside & ~bad, res, np.nan)
    zero = ~inside
    return (np.where(zero, 0.0, value), np.where(zero, 0.0, dr),
            np.where(zero, 0.0, dt), res, st)


def _barrier_super(form, r, t):
    p, n = form.pp.p, form.pp.n
    T, H, k = form["T"], form["H"], form["k"]
    Ht = H * np.e ** 2
    m = r.size
    st = np.zeros(m, dtype=int)
    inside = (r >= 1.0) & (r <= 1.0 + k) & (t >= 0) & (t <= T)
    st[~inside] = OUTSIDE
    rr = np.where(inside, r, 1.0)
    v = np.exp((t - T) / T - (rr - 1.0) / k)
    value = Ht * (1.0 - v)
    dr = Ht * v / k
    dt = -Ht * v / T
    res = dt + (Ht * v) ** (p - 1) * ((p - 1) * k ** (-p) - k ** (1 - p) * (n - 1) / rr)
    res = np.where(inside, res, np.nan)
    zero = ~inside
    return (np.where(zero, 0.0, value), np.where(zero, 0.0, dr),
            np.where(zero, 0.0, dt), res, st)


def _gaussian(form, r, t):
    n = form.pp.n
    T, rho0 = form["T"], form["rho0"]
    m = r.size
    st = np.zeros(m, dtype=int)
    inside = (r >= 1.0) & (r <= rho0) & (t > 0) & (t <= T)
    st[~inside] = OUTSIDE
    tt = np.where(inside, t, 1.0)
    rr = np.where(inside, r, 1.0)
    G = np.exp(-(rr ** 2 - 1.0) / (4 * tt))
    G0 = np.exp(-1.0 / (4 * tt))
    value = G - G0
    dr = -rr / (2 * tt) * G
    dt = (rr ** 2 - 1.0) / (4 * tt ** 2) * G - G0 / (4 * tt ** 2)
    res = G * (2 * n * tt - 1.0) / (4 * tt ** 2) - G0 / (4 * tt ** 2)
    corner = (np.abs(rr - 1.0) <= EDGE_TOL) & (tt <= EDGE_TOL)
    st[inside & corner] = NONSMOOTH
    res = np.where(inside & ~corner, res, np.nan)
    zero = ~inside
    return (np.where(zero, 0.0, value), np.where(zero, 0.0, dr),
            np.where(zero, 0.0, dt), res, st)


# ---------------------------------------------------------------------------
# regions and classification


def validity_region(form):
    """Declared validity region of a family, in local coordinates."""
    fam = form.family
    if fam == "FriendlyGiant":
        return Region("box", 0.0, form["length"], 0.0, 0.9 * form["T"], form["length"])
    if fam == "Linear":
        return Region("box", 0.0, 1.0, 0.0, 1.0, 1.0)
    if fam in ("BarrierSub", "GaussianLimit"):
        return Region("shell", 1.0, form["rho0"], 0.0, form["T"])
    return Region("shell", 1.0, 1.0 + form["k"], 0.0, form["T"])


def sample_region(form, region=None, n_samples=10_000, seed=0, collar=1e-6):
    """Sample points of a region, excluding a collar around its edges.

    Points returned are in global coordinates (the form's frame applied).
    Samples falling within ``collar`` of a truncation edge are rejected.
    """
    region = region or validity_region(form)
    n = form.pp.n
    rng = np.random.default_rng(seed)
    out_x, out_t = [], []
    need = n_samples
    for _ in range(50):
        m = max(2 * need, 64)
        span = region.t_hi - region.t_lo
        t = rng.uniform(region.t_lo + collar * span, region.t_hi - collar * span, m)
        if region.kind == "shell":
            rlo, rhi = region.lo + collar, region.hi - collar
            if n == 1:
                r = rng.uniform(rlo, rhi, m)
                Y = (r * rng.choice([-1.0, 1.0], m))[:, None]
            else:
                d = rng.standard_normal((m, n))
                d /= np.linalg.norm(d, axis=1, keepdims=True)
                r = rng.uniform(rlo, rhi, m)
                Y = d * r[:, None]
            keep = np.ones(m, dtype=bool)
            if form.family == "BarrierSub":
                p = form.pp.p
                keep &= np.abs(_sub_arg(r, t, p)) > collar
                keep &= np.abs(_sub_arg(form["rho0"], t, p)) > collar
        else:
            Y = rng.uniform(-region.width, region.width, (m, n))
            Y[:, -1] = rng.uniform(region.lo + collar, region.hi - collar, m)
            keep = np.ones(m, dtype=bool)
        Y, t = Y[keep], t[keep]
        out_x.append(Y)
        out_t.append(t)
        need -= len(t)
        if need <= 0:
            break
    if not out_t or sum(len(t) for t in out_t) == 0:
        raise EmptyRegion("no admissible samples in region")
    Y = np.concatenate(out_x)[:n_samples]
    t = np.concatenate(out_t)[:n_samples]
    if len(t) < n_samples:
        raise EmptyRegion("region too thin for the requested sample count")
    # local -> global
    fr = form.frame
    e = np.asarray(fr.direction)
    if form.family in ("FriendlyGiant", "Linear") and n > 1:
        Y = _rotate_to(Y, e)
    elif form.family in ("FriendlyGiant", "Linear"):
        Y = Y * e[0]
    X = np.asarray(fr.center) + fr.scale * Y
    tg = fr.t_shift + fr.scale ** form.pp.p * t
    return X, tg


def _rotate_to(Y, e):
    # orthonormal basis whose last vector is e
    n = len(e)
    M = np.eye(n)
    M[:, -1] = e
    Q, _ = np.linalg.qr(M[:, ::-1])
    Q = Q[:, ::-1]
    if Q[:, -1] @ e < 0:
        Q[:, -1] *= -1
    return Y @ Q.T


def classify_region(form, region=None, tol=1e-10, n_samples=10_000, seed=0, collar=1e-6):
    """Classify a form on a sampled region by the sign of its residual.

    Returns
    -------
    Classification
        ``kind`` is 'Solution' if ``|res| <= tol`` at all samples,
        'Subsolution' if ``res <= tol``, 'Supersolution' if
        ``res >= -tol`` and 'Neither' otherwise.
    """
    if n_samples < 1000:
        raise OutOfRange("classification needs at least 1000 samples")
    X, t = sample_region(form, region, n_samples, seed, collar)
    b = evaluate(form, X, t)
    ok = b.status == OK
    if not ok.any():
        raise EmptyRegion("no smooth samples in region")
    res = b.residual[ok]
    Xo, to = X[ok], t[ok]
    rmax, rmin = float(res.max()), float(res.min())
    if max(abs(rmax), abs(rmin)) <= tol:
        kind = "Solution"
    elif rmax <= tol:
        kind = "Subsolution"
    elif rmin >= -tol:
        kind = "Supersolution"
    else:
        kind = "Neither"
    if kind == "Subsolution":
        i = int(np.argmax(res))
    elif kind == "Supersolution":
        i = int(np.argmin(res))
    else:
        i = int(np.argmax(np.abs(res)))
    return Classification(kind, rmax, rmin, float(res[i]), Xo[i], float(to[i]), int(ok.sum()))


def gradient_lower_bound(form, n_r=2001):
    """Minimum of ``|grad h(x, T)|`` over ``1 <= |x| <= rho0`` and its bound.

    Returns
    -------
    (observed_min, bound)
        ``bound = n exp(-n/p) (1-a)^{n/p}``.
    """
    if form.family != "BarrierSub":
        raise OutOfRange("gradient bound applies to BarrierSub")
    p, n = form.pp.p, form.pp.n
    T, rho0, a = form["T"], form["rho0"], form["a"]
    r = np.linspace(1.0, rho0, n_r)
    g = np.maximum(_sub_arg(r, T, p), 0.0) ** ((p - 1) / (p - 2))
    grad = (r * g / (p * T)) ** (1.0 / (p - 1))
    return float(grad.min()), float(n * np.exp(-n / p) * (1 - a) ** (n / p))


def _h_value(p, n, a, r, t):
    """BarrierSub value (p > 2) or Gaussian limit (p == 2), zero outside."""
    if p == 2:
        rho0 = np.sqrt(2.0)
        inside = (r >= 1) & (r <= rho0) & (t > 0)
        tt = np.where(t > 0, t, 1.0)
        v = np.exp(-(r ** 2 - 1) / (4 * tt)) - np.exp(-1 / (4 * tt))
        return np.where(inside, v, 0.0)
    T, rho0 = _sub_constants(p, n, a)
    beta = (p - 1) / (p - 2)
    inside = (r >= 1) & (r <= rho0) & (t > 0)
    tt = np.where(t > 0, t, 1.0)
    g = np.maximum(_sub_arg(r, tt, p), 0.0) ** beta
    g0 = np.maximum(_sub_arg(rho0, tt, p), 0.0) ** beta
    return np.where(inside, g - g0, 0.0)


def p2_limit_distance(a, n, p_list, probes=None):
    """Sup-distance between BarrierSub at each ``p`` and its ``p -> 2`` limit.

    Parameters
    ----------
    a : float
        Shape parameter in (0, 1).
    n : int
    p_list : sequence of float
        Strictly decreasing, all > 2.
    probes : sequence of (r, t), optional
        Radii and times.  Default: a 40 x 40 grid over
        ``1 < r < sqrt(2)``, ``0 < t <= 1/(2n)``.

    Returns
    -------
    list of float
    """
    p_list = [float(p) for p in p_list]
    if not p_list:
        raise BadSequence("empty p sequence")
    if any(p <= 2 for p in p_list):
        raise BadSequence("all p must exceed 2")
    if any(b >= a_ for a_, b in zip(p_list, p_list[1:])):
        raise BadSequence("p sequence must be strictly decreasing")
    if not 0 < a < 1:
        raise OutOfRange("a must lie in (0,1)")
    if probes is None:
        rr, tt = np.meshgrid(np.linspace(1.0, np.sqrt(2.0), 40)[1:-1],
                             np.linspace(0.0, 1.0 / (2 * n), 41)[1:])
        probes = np.column_stack([rr.ravel(), tt.ravel()])
    probes = np.asarray(probes, dtype=float).reshape(-1, 2) if len(probes) else np.empty((0, 2))
    if probes.shape[0] == 0:
        raise EmptyRegion("empty probe set")
    r, t = probes[:, 0], probes[:, 1]
    lim = _h_value(2, n, a, r, t)
    return [float(np.max(np.abs(_h_value(p, n, a, r, t) - lim))) for p in p_list]
