"""Empirical checks of the boundary estimates.

Each check samples a field on its own intrinsic boxes, built from the
waiting times and levels of the estimate it tests, and fits the smallest
constant that makes the estimate hold on the samples.

"Vanishes continuously on the lateral boundary" is read as: the lateral
trace over the stated window is at most ``VANISH_TOL`` times the interior
supremum over the same window (or ``VANISH_TOL * lam`` where a level
``lam`` is given).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    HypothesisViolation,
    OutOfRange,
    ShapeMismatch,
    SwapPerformed,
    WindowTooShort,
)
from .fields import view
from .geometry import corkscrew, st1pp_satisfied
from .closed_forms import PParams, friendly_giant_coefficient, make_closed_form, values as cf_values
from .reports import InequalityReport, jsonable
from .solver import Trajectory

__all__ = [
    "DecayFit",
    "BhpReport",
    "check_oscillation_decay",
    "check_carleson",
    "fit_decay_envelope",
    "check_boundary_harnack",
    "bhp_counterexample",
    "barenblatt",
    "VANISH_TOL",
]

VANISH_TOL = 1e-6

SIGMA_GRID = tuple(np.round(np.linspace(0.05, 0.95, 19), 10))


def _ratio(num, den):
    if den > 0:
        return num / den
    return math.inf if num > 0 else 0.0


def _vanishes(F, center, radius, t_lo, t_hi, level=None, shift=0.0):
    """Lateral trace of ``(u - shift)_+`` against the vanishing tolerance."""
    trace = max(F.lateral_sup(center, radius, t_lo, t_hi) - shift, 0.0)
    ref = level if level is not None else max(F.interior_sup(center, radius, t_lo, t_hi) - shift, 0.0)
    return trace <= VANISH_TOL * ref or trace == 0.0, trace, ref


# ---------------------------------------------------------------------------
# oscillation decay


def check_oscillation_decay(field, x0, t0, r, lam, sigma_grid=None, max_halvings=40,
                            budget=16.0, domain=None, h=None, t_range=None):
    """Fit the oscillation-decay factor at a boundary point.

    With ``Q_s^l = (B_s(x0) cap Omega) x (t0 - l^{2-p} s^p, t0)`` and
    ``sup_{Q_r^lam} u <= lam``, the largest ``sigma`` of the grid with
    ``sup_{Q_{sigma r}^{lam/2}} u <= lam/2`` is located; grid values above
    ``2^{(2-p)/p}`` are excluded so the smaller box stays inside the
    larger one.  With that ``sigma`` the halvings
    ``sup_{Q_{sigma^j r}^{2^-j lam}} u <= 2^-j lam`` are followed until
    one fails or ``sigma^j r`` drops below two grid spacings.

    The fitted constant is ``1 / sigma``.

    Raises
    ------
    HypothesisViolation
    """
    F = view(field, domain=domain, h=h, t_range=t_range)
    p, dom = F.p, F.domain
    x0 = np.atleast_1d(np.asarray(x0, float))
    if not dom.on_boundary(x0, tol=1e-9):
        raise HypothesisViolation("x0 on the boundary", f"d(x0)={dom.distance(x0)}")
    if not (r > 0 and lam > 0):
        raise HypothesisViolation("r > 0 and lam > 0", f"r={r}, lam={lam}")
    length = lam ** (2 - p) * r ** p
    if t0 - length < F.t_start - 1e-12 * max(1, abs(t0)) or t0 > F.t_end:
        raise HypothesisViolation("Q_r^lam inside the data", f"window=({t0 - length}, {t0})")
    ok, trace, _ = _vanishes(F, x0, r, t0 - length, t0, level=lam)
    if not ok:
        raise HypothesisViolation("vanishes on the lateral boundary", f"trace={trace}, lam={lam}")
    top = F.box_sup(x0, r, t0 - length, t0)
    if top > lam:
        raise HypothesisViolation("sup over Q_r^lam <= lam", f"sup={top}, lam={lam}")
    cap = 2 ** ((2 - p) / p)
    grid = sorted((float(s) for s in (sigma_grid or SIGMA_GRID) if 0 < s < 1 and s <= cap + 1e-14),
                  reverse=True)
    if not grid:
        raise HypothesisViolation("sigma grid has a value <= 2^((2-p)/p)")
    floor = 2 * F.grid.h

    def box(s, level):
        L = level ** (2 - p) * s ** p
        return F.box_sup(x0, s, t0 - L, t0)

    sigma, first = None, None
    for s in grid:
        v = box(s * r, lam / 2)
        if v <= lam / 2:
            sigma, first = s, v
            break
    if sigma is None:
        return InequalityReport("oscillation_decay", top, lam / 2, math.inf, budget,
                                {"x0": x0.tolist(), "t0": t0, "r": r, "lam": lam, "p": p},
                                {"sigma": None, "depth": 0, "saturated": False})
    depth, saturated, levels = 1, False, [[1, sigma * r, first]]
    for j in range(2, max_halvings + 1):
        s = sigma ** j * r
        if s < floor:
            saturated = True
            break
        v = box(s, lam * 2.0 ** -j)
        levels.append([j, s, v])
        if v > lam * 2.0 ** -j:
            break
        depth = j
    else:
        saturated = True
    cfg = {"x0": x0.tolist(), "t0": float(t0), "r": float(r), "lam": float(lam), "p": p}
    return InequalityReport("oscillation_decay", first, lam / 2, 1 / sigma, budget, cfg,
                            {"sigma": sigma, "depth": depth, "saturated": saturated,
                             "levels": levels, "sigma_cap": cap, "trace": trace})


# ---------------------------------------------------------------------------
# Carleson


def _carleson_one(F, x, a, ua, t, r, d1, d2, d3, lam, C4, C5, strict):
    p = F.p
    tau = C4 / 4 * (C5 * ua) ** (2 - p) * r ** p
    e1, e2, e3 = d1 ** (p - 1), d2 ** (p - 1), d3 ** (p - 1)
    if not t - F.t_start > (e1 + e2 + 2 * e3) * tau:
        raise HypothesisViolation("time condition: t > (d1^(p-1)+d2^(p-1)+2 d3^(p-1)) tau",
                                  f"t - t_start={t - F.t_start}, tau={tau}")
    vlo, vhi = t - (e1 + e2 + e3) * tau, t - e1 * tau
    ok, trace, ref = _vanishes(F, x, r, vlo, vhi, shift=lam)
    if not ok and strict:
        raise HypothesisViolation("(u - lam)_+ vanishes on the lateral window",
                                  f"trace={trace}, interior sup={ref}")
    qlo, qhi = t - (e1 + e2) * tau, t - e1 * tau
    top = F.box_sup(x, r, qlo, qhi)
    K = _ratio(max(top - lam, 0.0), ua)
    return {"delta1": d1, "K": K, "sup": top, "tau": tau, "Q": [qlo, qhi],
            "vanishing_window": [vlo, vhi], "vanishes": bool(ok), "trace": trace}


def check_carleson(field, x, t, r, delta1=0.5, delta2=0.5, delta3=0.5, lam=0.0, C4=1.0, C5=1.0,
                   c6=4.0, c7=1.0, budget=None, strict=True, domain=None, h=None, t_range=None):
    """Fit the Carleson constant at a boundary point.

    With ``a = a_r(x)`` and ``tau = (C4/4) (C5 u(a, t))^{2-p} r^p``, the
    box is ``Q = (B_r(x) cap Omega) x (t - (d1^{p-1} + d2^{p-1}) tau,
    t - d1^{p-1} tau)`` and the fitted constant is
    ``K = (sup_Q u - lam)_+ / u(a, t)``.  The bound it is compared with
    is ``(c6/d3)^{c7/d1}`` unless ``budget`` is given.

    ``delta1`` may be a sequence.  The bound grows as ``delta1``
    decreases, so the fit at ``delta1`` is the largest raw ``K`` over all
    sweep values ``>= delta1``; the report carries the fit at the
    smallest ``delta1`` and the sweep in ``details``.

    With ``strict=False`` a lateral trace above tolerance is recorded
    instead of raised (useful for fields that do not vanish at all).

    Raises
    ------
    HypothesisViolation
        Naming the failed clause.
    """
    F = view(field, domain=domain, h=h, t_range=t_range)
    p, dom = F.p, F.domain
    x = np.atleast_1d(np.asarray(x, float))
    d1s = sorted({float(d) for d in np.atleast_1d(delta1)}, reverse=True)
    d2, d3 = float(delta2), float(delta3)
    if not 0 < d2 < 1:
        raise HypothesisViolation("delta2 in (0,1)", f"delta2={d2}")
    if not 0 < d3 <= 1:
        raise HypothesisViolation("delta3 in (0,1]", f"delta3={d3}")
    if not all(0 < d <= d3 for d in d1s):
        raise HypothesisViolation("0 < delta1 <= delta3", f"delta1={d1s}, delta3={d3}")
    if lam < 0:
        raise HypothesisViolation("lam >= 0", f"lam={lam}")
    if not dom.on_boundary(x, tol=1e-9):
        raise HypothesisViolation("x on the boundary", f"d(x)={dom.distance(x)}")
    if not 0 < r < dom.r0:
        raise HypothesisViolation("0 < r < r0", f"r={r}, r0={dom.r0}")
    a = corkscrew(dom, x, r, check=False)
    if not F.t_start < t <= F.t_end:
        raise HypothesisViolation("t in data range", f"t={t}")
    ua = F.value(a, t)
    if not ua > 0:
        raise HypothesisViolation("u(a_r(x), t) > 0", f"u={ua}")
    rows, running = [], 0.0
    for d1 in d1s:
        row = _carleson_one(F, x, a, ua, t, r, d1, d2, d3, lam, C4, C5, strict)
        running = max(running, row["K"])
        row["envelope"] = running
        row["bound"] = (c6 / d3) ** (c7 / d1)
        rows.append(row)
    last = rows[-1]
    if budget is None:
        budget = last["bound"]
    cfg = {"x": x.tolist(), "t": float(t), "r": float(r), "delta1": d1s, "delta2": d2,
           "delta3": d3, "lam": float(lam), "C4": C4, "C5": C5, "c6": c6, "c7": c7, "p": p,
           "strict": bool(strict)}
    return InequalityReport("carleson", max(last["sup"] - lam, 0.0), ua, last["envelope"], budget,
                            cfg, {"corkscrew": a.tolist(), "u_corkscrew": ua, "sweep": rows,
                                  "vanishes": all(row["vanishes"] for row in rows)})


# ---------------------------------------------------------------------------
# decay envelopes


@dataclass
class DecayFit:
    """Result of a decay-envelope fit.

    Attributes
    ----------
    fitted_exponent : float
        Least-squares slope of ``log sup`` against ``log t`` (against
        ``t`` at p = 2, where it is the exponential rate).  For the lower
        side, the exponent of the envelope form.
    envelope_constant : float
        Smallest ``c1`` making the envelope bound hold on the window.
    window : (float, float)
    side : {'upper', 'lower'}
    regime : {'long', 'short', 'pointwise'}
    residual : float
        RMS residual of the log fit.
    r2 : float
    expected_exponent : float
    anchor : float
        ``Lambda_bar`` (mean of the initial data) or ``lambda``.
    t, values, envelope : ndarray
        Samples in the window, the fitted quantity and the envelope.
    """

    fitted_exponent: float
    envelope_constant: float
    window: tuple
    side: str
    regime: str = "long"
    residual: float = 0.0
    r2: float = 1.0
    expected_exponent: float = math.nan
    anchor: float = math.nan
    c2: float = math.nan
    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    values: np.ndarray = field(default_factory=lambda: np.empty(0))
    envelope: np.ndarray = field(default_factory=lambda: np.empty(0))
    details: dict = field(default_factory=dict)

    @property
    def relative_error(self):
        e = self.expected_exponent
        return abs(self.fitted_exponent - e) / abs(e) if e else math.nan

    def to_csv(self, path):
        """Write ``t, value, envelope`` rows."""
        data = np.column_stack([self.t, self.values, self.envelope])
        np.savetxt(path, data, delimiter=",", header="t,value,envelope", comments="", fmt="%.17g")
        return path

    def to_dict(self):
        return jsonable({"side": self.side, "regime": self.regime,
                         "fitted_exponent": self.fitted_exponent,
                         "expected_exponent": self.expected_exponent,
                         "envelope_constant": self.envelope_constant, "window": list(self.window),
                         "residual": self.residual, "r2": self.r2, "anchor": self.anchor,
                         "c2": self.c2, "details": self.details})


def _sup_envelope(c1, lam_bar, t, p):
    if p == 2:
        return c1 * math.exp(-t / c1) * lam_bar
    return c1 * ((p - 2) * lam_bar ** (p - 2) * t / c1 + 1) ** (-1 / (p - 2)) * lam_bar


def _lower_envelope(c1, lam, s, p):
    # s = (t - t0) / (lam^{2-p} r^p); the d/r factor is applied by the caller
    if p == 2:
        return lam / c1 * math.exp(-c1 * s)
    return lam / c1 * (c1 * (p - 2) * s + 1) ** (-1 / (p - 2))


def _solve_increasing(g, target, lo=1e-12, hi=1.0):
    """Smallest ``c`` with ``g(c) >= target`` for increasing ``g``."""
    if g(lo) >= target:
        return lo
    while g(hi) < target:
        hi *= 2
        if hi > 1e300:
            return math.inf
    return brentq(lambda c: g(c) - target, lo, hi, xtol=1e-14 * hi, rtol=1e-14)


def _linfit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    res = y - pred
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - float(np.sum(res ** 2)) / ss if ss > 0 else 1.0
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2))), r2


def _initial_mean(traj):
    ins = traj.grid.inside
    return float(traj.U[0, ins].mean())


def barenblatt(X, t, pp, C=1.0):
    """Source-type solution with sup ``C^{(p-1)/(p-2)} t^{-n/sigma}``.

    ``B = t^{-k} (C - q |x t^{-k/n}|^{p/(p-1)})_+^{(p-1)/(p-2)}`` with
    ``k = n/sigma``, ``sigma = n(p-2) + p`` and ``q = ((p-2)/p)
    (1/sigma)^{1/(p-1)}``.  It is the extremal case of the short-time
    sup decay.
    """
    p, n = pp.p, pp.n
    if p <= 2:
        raise OutOfRange("the source-type profile needs p > 2")
    X = np.atleast_2d(np.asarray(X, float))
    sig = n * (p - 2) + p
    k = n / sig
    q = (p - 2) / p * (1 / sig) ** (1 / (p - 1))
    xi = np.linalg.norm(X, axis=1) * t ** (-k / n)
    return t ** (-k) * np.maximum(C - q * xi ** (p / (p - 1)), 0.0) ** ((p - 1) / (p - 2))


def fit_decay_envelope(traj, side="upper", anchor=None, regime="long", c2=1.0, window=None,
                       t_origin=0.0, min_points=5):
    """Fit the decay of a boundary-vanishing solution.

    ``side='upper'``, ``regime='long'``: with ``Lambda_bar`` the mean of
    the initial data (or ``anchor``), fits ``log sup u(., t)`` against
    ``log t`` on ``t > c2 Lambda_bar^{2-p}`` (against ``t`` when p = 2)
    and finds the smallest ``c1`` with ``sup u(., t) <= c1 ((p-2)
    Lambda_bar^{p-2} t / c1 + 1)^{-1/(p-2)} Lambda_bar`` there.  The
    expected exponent is ``-1/(p-2)``.

    ``side='upper'``, ``regime='short'``: fits ``log sup`` against
    ``log(t - t_origin)`` on ``window``; expected exponent ``-n/sigma``
    with ``sigma = n(p-2) + p``.  The envelope constant is the smallest
    ``c`` with ``sup u <= c (t - t_origin)^{-n/sigma} Lambda_bar^{p/sigma}``.

    ``side='lower'``: ``anchor = {'center', 'radius', 'rho'}`` names the
    ball ``B_r(x0)`` and the inner ball ``B_rho(x0)`` whose initial mean
    is ``lambda``.  Finds the smallest ``c1`` with ``u(x, t) >= (lambda /
    c1)(c1 (p-2) s + 1)^{-1/(p-2)} d(x, dB_r)/r`` at every node of
    ``B_r(x0)``, ``s = (t - t0)/(lambda^{2-p} r^p)``, on ``s > c2``.  With
    ``c2=None`` the transient ends at the first sample after which the
    pointwise requirement on ``c1`` stays within twice its late-time
    value.

    Raises
    ------
    WindowTooShort
        Fewer than ``min_points`` samples in the window.
    """
    if not isinstance(traj, Trajectory):
        raise OutOfRange("decay fits need a solver trajectory")
    p, n = traj.pp.p, traj.pp.n
    ts = traj.times
    if side == "upper":
        lam_bar = float(anchor) if anchor is not None else _initial_mean(traj)
        if not lam_bar > 0:
            raise OutOfRange("initial data must have positive mean")
        S = traj.sup()
        if regime == "long":
            lo = c2 * lam_bar ** (2 - p) if window is None else window[0]
            hi = ts[-1] if window is None else window[1]
            sel = (ts > lo) & (ts <= hi) & (S > 0)
            if sel.sum() < min_points:
                raise WindowTooShort(f"{int(sel.sum())} samples in ({lo}, {hi}]")
            t, s = ts[sel], S[sel]
            if p == 2:
                slope, _, res, r2 = _linfit(t, np.log(s))
                expected = math.nan
            else:
                slope, _, res, r2 = _linfit(np.log(t), np.log(s))
                expected = -1 / (p - 2)
            c1 = max(_solve_increasing(lambda c, tt=tt: _sup_envelope(c, lam_bar, tt, p), sv)
                     for tt, sv in zip(t, s))
            env = np.array([_sup_envelope(c1, lam_bar, tt, p) for tt in t])
            return DecayFit(slope, c1, (float(lo), float(hi)), "upper", "long", res, r2, expected,
                            lam_bar, float(c2), t, s, env,
                            {"form": "exp" if p == 2 else "power"})
        if regime == "short":
            if window is None:
                raise OutOfRange("the short-time fit needs an explicit window")
            lo, hi = window
            sel = (ts > lo) & (ts <= hi) & (S > 0)
            if sel.sum() < min_points:
                raise WindowTooShort(f"{int(sel.sum())} samples in ({lo}, {hi}]")
            t, s = ts[sel], S[sel]
            sig = n * (p - 2) + p
            slope, _, res, r2 = _linfit(np.log(t - t_origin), np.log(s))
            base = (t - t_origin) ** (-n / sig) * lam_bar ** (p / sig)
            c = float(np.max(s / base))
            return DecayFit(slope, c, (float(lo), float(hi)), "upper", "short", res, r2, -n / sig,
                            lam_bar, math.nan, t, s, c * base, {"sigma": sig, "t_origin": t_origin})
        raise OutOfRange(f"unknown regime {regime!r}")
    if side == "lower":
        if not isinstance(anchor, dict):
            raise OutOfRange("the lower fit needs anchor={'center', 'radius', 'rho'}")
        x0 = np.atleast_1d(np.asarray(anchor["center"], float))
        r = float(anchor["radius"])
        rho = float(anchor.get("rho", r / 4))
        grid = traj.grid
        ins = grid.inside
        dist = r - np.linalg.norm(grid.X[ins] - x0, axis=1)
        keep = ins[dist > 0]
        dist = dist[dist > 0]
        inner = grid.nodes_in_ball(x0, rho)
        if len(inner) == 0:
            raise OutOfRange("no interior node in the inner ball")
        lam = float(traj.U[0, inner].mean())
        if not lam > 0:
            raise OutOfRange("initial mean over the inner ball must be positive")
        t0 = traj.t_start
        unit = lam ** (2 - p) * r ** p
        s_all = (ts - t0) / unit
        m_all = np.array([float(np.min(traj.U[k, keep] * r / dist)) for k in range(len(ts))])
        need = np.array([_solve_increasing(lambda c, ss=ss: 1.0 / max(_lower_envelope(c, lam, ss, p), 1e-300),
                                           1.0 / mv) if mv > 0 and ss > 0 else math.inf
                         for ss, mv in zip(s_all, m_all)])
        if window is not None:
            inwin = (ts >= window[0]) & (ts <= window[1])
        else:
            inwin = np.ones(len(ts), bool)
        if c2 is None:
            idx = np.flatnonzero(inwin & np.isfinite(need))
            if len(idx) < min_points:
                raise WindowTooShort("too few samples with a positive field")
            late = float(np.max(need[idx[-max(min_points, len(idx) // 4):]]))
            tail = np.maximum.accumulate(need[idx][::-1])[::-1]
            k = idx[int(np.argmax(tail <= 2 * late))]
            c2 = float(s_all[k - 1]) if k > 0 else 0.0
        sel = (s_all > c2) & inwin & np.isfinite(need)
        if sel.sum() < min_points:
            raise WindowTooShort(f"{int(sel.sum())} samples with s > c2={c2}")
        s, m = s_all[sel], m_all[sel]
        c1 = float(np.max(need[sel]))
        env = np.array([_lower_envelope(c1, lam, ss, p) for ss in s])
        expected = math.nan if p == 2 else -1 / (p - 2)
        return DecayFit(expected, c1, (float(ts[sel][0]), float(ts[sel][-1])), "lower", "pointwise",
                        0.0, 1.0, expected, lam, float(c2), ts[sel], m, env,
                        {"center": x0.tolist(), "radius": r, "rho": rho,
                         "note": "values are min over the ball of u r / d(x, dB_r)"})
    raise OutOfRange(f"unknown side {side!r}")


# ---------------------------------------------------------------------------
# boundary Harnack


@dataclass
class BhpReport(InequalityReport):
    """Boundary Harnack outcome.

    ``fitted_constant`` is ``C2bar`` (global scope) or the smallest ``C``
    with ``C^{-1} u(A-)/v(A*+) <= u/v <= C u(A+)/v(A-)`` on the two boxes
    (local scope).
    """

    ratio_bounds: tuple = (math.nan, math.nan)
    holder: tuple = (math.nan, 0.0)
    tstar: float = math.nan
    windows: dict = field(default_factory=dict)

    def to_dict(self):
        d = super().to_dict()
        d.update(jsonable({"ratio_bounds": list(self.ratio_bounds), "holder": list(self.holder),
                           "tstar": self.tstar, "windows": self.windows}))
        return d


def _same_grid(Fu, Fv):
    gu, gv = Fu.grid, Fv.grid
    if gu is gv:
        return
    if gu.h != gv.h or tuple(gu.dims) != tuple(gv.dims) or not np.allclose(gu.origin, gv.origin):
        raise ShapeMismatch("u and v must live on the same grid")


def _merged_times(Fu, Fv, lo, hi, cap=64):
    ts = np.unique(np.concatenate([Fu.times_in(lo, hi), Fv.times_in(lo, hi)]))
    if len(ts) > cap:
        ts = ts[np.unique(np.round(np.linspace(0, len(ts) - 1, cap)).astype(int))]
    return ts


def _holder_from_pairs(dr, d, h):
    keep = d >= 2 * h
    dr, d = dr[keep], d[keep]
    if len(d) == 0:
        return math.nan, 0.0, 0
    if not np.any(dr > 0):
        return math.nan, 0.0, int(len(d))
    edges = np.geomspace(d.min(), d.max() * (1 + 1e-12), 13)
    xs, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (d >= a) & (d < b)
        if sel.any() and dr[sel].max() > 0:
            xs.append(math.log(math.sqrt(a * b)))
            ys.append(math.log(dr[sel].max()))
    if len(xs) >= 2:
        sigma = float(np.clip(np.polyfit(xs, ys, 1)[0], 1e-3, 1.0))
    else:
        sigma = 1.0
    C = float(np.max(dr / d ** sigma))
    return sigma, C, int(len(d))


def _global_bhp(Fu, Fv, T_minus, T_plus, C1bar, budget, eps_grid):
    p = Fu.p
    lu, lv = _initial_mean_view(Fu), _initial_mean_view(Fv)
    if not (lu > 0 and lv > 0):
        raise HypothesisViolation("positive initial means", f"Lambda_u={lu}, Lambda_v={lv}")
    lo_l, hi_l = min(lu, lv), max(lu, lv)
    if T_minus is None:
        T_minus = 2 * C1bar
    if T_plus is None:
        T_plus = 2 * T_minus * (hi_l / lo_l) ** (p - 2)
    if not C1bar <= T_minus <= T_plus:
        raise HypothesisViolation("C1bar <= T- <= T+", f"C1bar={C1bar}, T-={T_minus}, T+={T_plus}")
    lo, hi = T_minus * lo_l ** (2 - p), T_plus * hi_l ** (2 - p)
    if not lo <= hi:
        raise HypothesisViolation("T- min(L)^(2-p) <= T+ max(L)^(2-p)", f"lo={lo}, hi={hi}")
    if hi > min(Fu.t_end, Fv.t_end) or lo < max(Fu.t_start, Fv.t_start):
        raise HypothesisViolation("window D inside the data", f"D=({lo}, {hi})")
    ins = Fu.grid.inside
    ts = _merged_times(Fu, Fv, lo, hi)
    q = lu / lv
    rs, xs, tt = [], [], []
    rmin, rmax = math.inf, 0.0
    for t in ts:
        u, v = Fu.nodal(t)[ins], Fv.nodal(t)[ins]
        if np.any(v <= 0) or np.any(u <= 0):
            raise HypothesisViolation("u, v > 0 in the window", f"t={t}")
        R = u / v
        rmin, rmax = min(rmin, float(R.min())), max(rmax, float(R.max()))
        rs.append(R)
        xs.append(Fu.grid.X[ins])
        tt.append(np.full(len(ins), t))
    C2 = max(rmax / q, q / rmin)
    R, X, T = np.concatenate(rs), np.concatenate(xs), np.concatenate(tt)
    tm = hi_l ** ((p - 2) / p)
    rng = np.random.default_rng(0)
    i, j = rng.integers(0, len(R), 20000), rng.integers(0, len(R), 20000)
    d = np.linalg.norm(X[i] - X[j], axis=1) + tm * np.abs(T[i] - T[j]) ** (1 / p)
    sigma, C3, npairs = _holder_from_pairs(np.abs(R[i] - R[j]) / q, d, Fu.grid.h)
    shifts = {}
    for name, F, lam in (("u", Fu, lu), ("v", Fv, lv)):
        worst = 1.0
        step = lam ** (2 - p)
        for t in ts:
            base = F.nodal(t)[ins]
            for e in eps_grid:
                if t + e * step > F.t_end:
                    continue
                r = F.nodal(t + e * step)[ins] / base
                worst = max(worst, float(r.max()), float(1 / r.min()) if r.min() > 0 else math.inf)
        shifts[name] = worst
    cfg = {"scope": "global", "T_minus": T_minus, "T_plus": T_plus, "C1bar": C1bar, "p": p}
    return BhpReport("bhp_global", rmax, rmin, C2, budget, cfg,
                     {"Lambda_u": lu, "Lambda_v": lv, "n_times": len(ts), "holder_pairs": npairs,
                      "time_shift_c1": shifts},
                     (rmin, rmax), (sigma, C3), math.nan, {"D": [lo, hi]})


def _initial_mean_view(F):
    return float(F.nodal(F.t_start)[F.grid.inside].mean())


def _match_level(Fu, Fv, a, t0):
    """Intrinsic rescaling of v with ``v_lam(a, t0) = u(a, t0)``."""
    p = Fu.p
    target = Fu.value(a, t0)
    v0 = Fv.value(a, t0)
    if not (target > 0 and v0 > 0):
        raise HypothesisViolation("u(A-) > 0 and v(A-) > 0", f"u={target}, v={v0}")
    if p == 2:
        return target / v0

    def g(loglam):
        lam = math.exp(loglam)
        return Fv.scaled(lam).value(a, t0) - target

    def admissible(loglam):
        s = Fv.scaled(math.exp(loglam))
        return s.t_start <= t0 <= s.t_end

    lo, hi = math.log(target / v0), math.log(target / v0)
    step = 0.5
    for _ in range(80):
        if admissible(lo) and admissible(hi) and g(lo) * g(hi) <= 0:
            break
        lo -= step if admissible(lo - step) else 0
        hi += step if admissible(hi + step) else 0
        step *= 1.5
    if not (admissible(lo) and admissible(hi) and g(lo) * g(hi) <= 0):
        raise HypothesisViolation("u(A-) = v(A-) reachable by intrinsic rescaling")
    if g(lo) == 0:
        return math.exp(lo)
    return math.exp(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15))


def _largest_root(f, lo, hi, n=257, tol=1e-13):
    s = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in s])
    sign = np.sign(vals)
    changes = [k for k in range(n - 1) if sign[k] < 0 <= sign[k + 1] or sign[k] >= 0 > sign[k + 1]]
    if not changes:
        return None, 0
    k = changes[-1]
    a, b = s[k], s[k + 1]
    fa = vals[k]
    while b - a > tol * max(1.0, abs(b)):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b), len(changes)


def _ratio_box(Fu, Fv, idx, lo, hi):
    rmin, rmax = math.inf, 0.0
    for t in _merged_times(Fu, Fv, lo, hi):
        u, v = Fu.nodal(t)[idx], Fv.nodal(t)[idx]
        if np.any(v <= 0):
            return 0.0 if np.any(u > 0) else rmin, math.inf
        R = u / v
        rmin, rmax = min(rmin, float(R.min())), max(rmax, float(R.max()))
    return rmin, rmax


def _decay_constants(F, idx, dist, r, uA, lo, hi, upper=None):
    """Smallest ``c`` with ``uA d/(c r) <= u`` (and ``u <= c d upper / r``)."""
    c = 0.0
    for t in F.times_in(lo, hi):
        u = F.nodal(t)[idx]
        low = uA * dist / r
        c = max(c, float(np.max(np.where(u > 0, low / np.maximum(u, 1e-300), math.inf))))
        if upper is not None:
            c = max(c, float(np.max(u * r / (dist * upper))))
    return c


def _local_bhp(Fu, Fv, x0, t0, r, c4, c6, budget, c3_budget):
    p, dom = Fu.p, Fu.domain
    x0 = np.atleast_1d(np.asarray(x0, float))
    if not dom.on_boundary(x0, tol=1e-9):
        raise HypothesisViolation("x0 on the boundary", f"d(x0)={dom.distance(x0)}")
    if not 0 < r < dom.r0:
        raise HypothesisViolation("0 < r < r0", f"r={r}, r0={dom.r0}")
    a = corkscrew(dom, x0, r, check=False)
    lam_v = _match_level(Fu, Fv, a, t0)
    Fv = Fv.scaled(lam_v)
    uAm = Fu.value(a, t0)
    theta_m = uAm ** (2 - p)
    if not theta_m * r ** p < t0 - max(Fu.t_start, Fv.t_start):
        raise HypothesisViolation("theta_- r^p < t0", f"theta_- r^p={theta_m * r ** p}")
    T = min(Fu.t_end, Fv.t_end)
    idx = Fu.interior_nodes(x0, r)
    dist = dom.signed_distance(Fu.grid.X[idx])
    if len(idx) == 0:
        raise HypothesisViolation("B_r(x0) holds interior nodes")
    chosen, sub = None, []
    for c in ([c4] if c4 is not None else (0.25, 0.5, 1.0, 2.0, 4.0)):
        if not t0 + 2 * c * theta_m * r ** p < T:
            sub.append({"c4": c, "skipped": "t0 + 2 c4 theta_- r^p < T"})
            continue
        lo, hi = t0 + c * theta_m * r ** p, t0 + 2 * c * theta_m * r ** p
        c3 = _decay_constants(Fu, idx, dist, r, uAm, lo, hi)
        sub.append({"c4": c, "c3": c3})
        if chosen is None and (c4 is not None or c3 <= c3_budget):
            chosen = (c, c3)
    if chosen is None:
        raise HypothesisViolation("t0 + 2 c4 theta_- r^p < T with the lower decay holding",
                                  f"sub-checks={sub}")
    c4, c3 = chosen
    tp = t0 + 2 * c4 * theta_m * r ** p
    uAp, vAp = Fu.value(a, tp), Fv.value(a, tp)
    swapped = False
    if vAp < uAp:
        Fu, Fv = Fv, Fu
        uAp, vAp = vAp, uAp
        swapped = True
        warnings.warn("v(A+) < u(A+): u and v swapped", SwapPerformed, stacklevel=3)
    if not uAp > 0:
        raise HypothesisViolation("u(A+) > 0", f"u={uAp}")
    c6_fit = 5 * (uAp / uAm) ** (2 - p)
    if c6 is None:
        c6 = c6_fit
    th_u = uAp ** (2 - p) / c6
    rp = r ** p
    vlo, vhi = tp - 5 * th_u * rp, tp - th_u * rp
    for name, F in (("u", Fu), ("v", Fv)):
        ok, trace, ref = _vanishes(F, x0, r, max(vlo, F.t_start), vhi)
        if not ok:
            raise HypothesisViolation(f"{name} vanishes on the lateral window",
                                      f"trace={trace}, interior sup={ref}")

    def eq(s):
        return s - Fv.value(a, s) ** (2 - p) / c6 * rp - (tp - th_u * rp)

    left = tp - th_u * rp
    tstar, mult = _largest_root(eq, left + 1e-12 * max(1.0, abs(left)), tp)
    if tstar is None:
        raise HypothesisViolation("t+* exists in (t+ - theta_+u r^p, t+]")
    vAs = Fv.value(a, tstar)
    th_vs = vAs ** (2 - p) / c6
    up_lo, up_hi = tp - 2 * th_u * rp, tp - th_u * rp
    lo_lo = tp - (th_vs + th_u) * rp
    c5 = _decay_constants(Fu, idx, dist, r, uAm, up_lo, up_hi, upper=uAp)
    rmin_up, rmax_up = _ratio_box(Fu, Fv, idx, up_lo, up_hi)
    rmin_lo, rmax_lo = _ratio_box(Fu, Fv, idx, lo_lo, up_hi)
    upper_fit = _ratio(rmax_up, uAp / Fv.value(a, t0))
    lower_fit = _ratio(uAm / vAs, rmin_lo)
    fitted = max(upper_fit, lower_fit)
    cfg = {"scope": "local", "x0": x0.tolist(), "t0": float(t0), "r": float(r), "c4": c4,
           "c6": c6, "p": p}
    windows = {"upper_box": [up_lo, up_hi], "lower_box": [lo_lo, up_hi],
               "vanishing": [vlo, vhi], "tstar_interval": [left, tp], "lower_decay": [
                   t0 + c4 * theta_m * rp, tp]}
    details = {"theta_minus": theta_m, "theta_plus_u": th_u, "theta_star_v": th_vs,
               "t_plus": tp, "u_A_minus": uAm, "u_A_plus": uAp, "v_A_star": vAs,
               "v_rescaled_by": lam_v, "swapped": swapped, "tstar_roots": mult,
               "c3": c3, "c5": c5, "c6_fit": c6_fit, "c4_sweep": sub,
               "upper_fit": upper_fit, "lower_fit": lower_fit,
               "ratio_upper_box": [rmin_up, rmax_up], "ratio_lower_box": [rmin_lo, rmax_lo]}
    return BhpReport("bhp_local", rmax_up, rmin_lo, fitted, budget, cfg, details,
                     (min(rmin_up, rmin_lo), max(rmax_up, rmax_lo)), (math.nan, 0.0),
                     float(tstar), windows)


def check_boundary_harnack(traj_u, traj_v, scope="global", site=None, T_minus=None, T_plus=None,
                           C1bar=1.0, budget=None, c4=None, c6=None, c3_budget=50.0,
                           eps_grid=(0.25, 0.5, 1.0), domain=None, h=None, t_range=None):
    """Boundary Harnack comparison of two non-negative solutions.

    ``scope='global'``: with ``L_u, L_v`` the initial means,
    ``D = Omega x (T- min(L)^{2-p}, T+ max(L)^{2-p})``.  Reports the
    range of ``u/v`` on ``D``, ``C2bar = max(sup (u/v)/q, q/inf (u/v))``
    with ``q = L_u / L_v``, a Hölder fit ``|u/v(P) - u/v(Q)| <= C3bar q
    d(P, Q)^sigma`` in the metric ``|x - y| + max(L)^{(p-2)/p}
    |t - s|^{1/p}`` over pairs with ``d >= 2h``, and the elliptic-type
    time-shift ratios ``u(x, t + eps L^{2-p}) / u(x, t)``.  Defaults:
    ``T- = 2 C1bar`` and ``T+ = 2 T- (max L / min L)^{p-2}``, twice the
    smallest admissible values.

    ``scope='local'``: ``site = (x0, t0, r)``.  ``v`` is rescaled so that
    ``v(A-) = u(A-)`` and swapped with ``u`` if ``v(A+) < u(A+)``.
    ``c4`` (default: smallest of a grid for which the lower decay fit
    ``c3`` is within ``c3_budget``) and ``c6`` (default: the smallest
    value with ``5 theta_+ <= theta_-``) set the windows; ``t+*`` is the
    largest root of ``s - theta*_{+,v}(s) r^p = t+ - theta_{+,u} r^p``.

    Raises
    ------
    HypothesisViolation
    """
    Fu = view(traj_u, domain=domain, h=h, t_range=t_range)
    Fv = view(traj_v, domain=domain, h=h, t_range=t_range, grid=Fu.grid if Fu.kind == "closed_form" else None)
    _same_grid(Fu, Fv)
    if scope == "global":
        return _global_bhp(Fu, Fv, T_minus, T_plus, C1bar, 50.0 if budget is None else budget,
                           eps_grid)
    if scope == "local":
        if site is None:
            raise OutOfRange("local scope needs site=(x0, t0, r)")
        x0, t0, r = site
        return _local_bhp(Fu, Fv, x0, float(t0), float(r), c4, c6,
                          50.0 if budget is None else budget, c3_budget)
    raise OutOfRange(f"unknown scope {scope!r}")


def bhp_counterexample(p=3.0, T=1.0, t_window=(0.1, 0.5), bands=(0.25, 0.125, 0.0625, 0.03125),
                       C0=None, n_x=64, n_t=9, budget=50.0):
    """Friendly giant against the linear solution on ``(0, 1)``.

    The ratio ``u/v`` with ``u`` the friendly giant and ``v = x`` behaves
    like ``x^{2/(p-2)}`` at the boundary, so its infimum over the band
    ``(0, b) x t_window`` tends to zero with ``b``: no lower ratio bound
    holds.  At the same time the intrinsic condition ``T - t > C0
    u^{2-p} x^p`` fails at every sampled point when ``C0 = c_p^{p-2}``.

    The report passes iff both failures are observed, which is the
    expected outcome; ``fitted_constant`` is ``1/inf`` over the thinnest
    band.
    """
    pp = PParams(p, 1)
    fg = make_closed_form("FriendlyGiant", pp, {"T": T})
    lin = make_closed_form("Linear", pp)
    cp = friendly_giant_coefficient(p)
    C0 = cp ** (p - 2) if C0 is None else C0
    ts = np.linspace(t_window[0], t_window[1], n_t)
    infs, all_false, n_checked = [], True, 0
    for b in bands:
        xs = np.geomspace(b * 1e-3, b, n_x)[:-1]
        worst = math.inf
        for t in ts:
            u = cf_values(fg, xs.reshape(-1, 1), t)
            v = cf_values(lin, xs.reshape(-1, 1), t)
            worst = min(worst, float(np.min(u / v)))
            for uu, xx in zip(u, xs):
                n_checked += 1
                if st1pp_satisfied(float(uu), float(xx), T, float(t), C0, pp):
                    all_false = False
        infs.append(worst)
    decreasing = all(b < a for a, b in zip(infs, infs[1:]))
    vanishing = infs[-1] < infs[0] * (bands[-1] / bands[0]) ** (1.0 / (p - 2))
    lower_fails = decreasing and vanishing
    ok = bool(lower_fails and all_false)
    cfg = {"p": p, "T": T, "t_window": list(t_window), "bands": list(bands), "C0": C0}
    rep = BhpReport("bhp_counterexample", infs[-1], infs[0], 0.0 if ok else math.inf, budget, cfg,
                    {"band_inf": infs, "lower_bound_fails": lower_fails,
                     "st1pp_false_everywhere": all_false, "points_checked": n_checked,
                     "linked": ok, "expected": "must fail BHP and fail the intrinsic condition",
                     "blowup_exponent": 2 / (p - 2)},
                    (infs[-1], math.nan), (math.nan, 0.0), math.nan,
                    {"t_window": list(t_window)})
    return rep
