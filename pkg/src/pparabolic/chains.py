"""Harnack chains: ball covers of connecting curves, forward waiting-time
schedules, and empirical checks of the local Harnack inequalities and of
the forward/backward chain estimates near the boundary.

Constants in the chain estimates are existential.  Every check therefore
takes the constants it cannot fit as declared inputs and reports the
smallest value of the remaining one that makes the inequality hold on the
data, as an :class:`~pparabolic.reports.InequalityReport`.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .closed_forms import PParams
from .errors import (
    GeometryViolation,
    HypothesisViolation,
    NoCurve,
    NonPositiveValue,
    NTooSmall,
    OutOfRange,
)
from .fields import view
from .geometry import corkscrew
from .reports import InequalityReport

__all__ = [
    "ChainCover",
    "ChainSchedule",
    "cover_curve",
    "forward_schedule",
    "check_harnack",
    "check_chain",
    "check_chain_sweep",
    "DIRECTIONS",
    "DEFAULTS",
]

DIRECTIONS = ("forward_mean", "forward_point", "backward_mean", "backward_point")

# declared constants and budgets used when a caller gives none
DEFAULTS = {
    "c_h_grid": (0.25, 0.5, 1.0, 2.0, 4.0),
    "C_h_budget": 50.0,
    "C1": 1.0,
    "C2_budget": 50.0,
    "c2": 2.0,
    "c3": 1.0,
    "C4": 1.0,
    "C5": 1.0,
    "c5": 1.0,
    "c_h": 1.0,
    "chain_budget": 10.0,
}

_CURVE_SAMPLES = 400


# ---------------------------------------------------------------------------
# covers


@dataclass
class ChainCover:
    """Ordered admissible balls covering a curve from x to y.

    Attributes
    ----------
    centers : ndarray, shape (K, n)
    radii : ndarray, shape (K,)
    curve : ndarray, shape (V, n)
        Polyline vertices from x to y.
    N : int
        Balls per dyadic segment.
    k : int
        Dyadic depth, ``2^{-k} r in (rho/16, rho/8]``.
    piece : ndarray of int
        Segment index of each ball: ``j >= 0`` for the dyadic segments of
        the initial part, -1 for the middle part, -2 for the end part,
        -3 for a short curve covered uniformly.
    """

    centers: np.ndarray
    radii: np.ndarray
    curve: np.ndarray
    N: int
    k: int
    r: float
    rho: float
    piece: np.ndarray
    domain: object = None

    @property
    def balls(self):
        return [(c, float(s)) for c, s in zip(self.centers, self.radii)]

    def __len__(self):
        return len(self.radii)

    def invariants(self):
        """Evaluate the three cover invariants.

        Returns
        -------
        dict
            ``admissible`` (every ``4B`` inside the domain),
            ``consecutive`` (``x_{j+1} in B_{r_j}(x_j)``) and ``dyadic``
            (initial-segment radii ``N^{-1} 2^{-k+j-5} r`` with the depth
            rule).
        """
        d = self.domain.signed_distance(self.centers)
        admissible = bool(np.all(4 * self.radii < d))
        steps = np.linalg.norm(np.diff(self.centers, axis=0), axis=1)
        consecutive = bool(np.all(steps < self.radii[:-1]))
        dyadic = True
        if np.any(self.piece >= 0):
            lo, hi = self.rho / 16, self.rho / 8
            sk = 2.0 ** (-self.k) * self.r
            dyadic = lo < sk <= hi * (1 + 1e-12)
            for j in np.unique(self.piece[self.piece >= 0]):
                want = 2.0 ** (-self.k + j - 5) * self.r / self.N
                dyadic &= bool(np.allclose(self.radii[self.piece == j], want, rtol=1e-12))
        return {"admissible": admissible, "consecutive": consecutive, "dyadic": bool(dyadic)}


def _arclength(V):
    seg = np.linalg.norm(np.diff(V, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def _point_at(V, cum, s):
    s = np.atleast_1d(s)
    out = np.empty((len(s), V.shape[1]))
    for d in range(V.shape[1]):
        out[:, d] = np.interp(s, cum, V[:, d])
    return out


def _curve_ok(domain, V, M):
    """Uniform-curve conditions: length <= M |x - y| and
    ``min(arc to x, arc to y) <= M d(gamma)`` along the curve."""
    cum = _arclength(V)
    L = cum[-1]
    chord = np.linalg.norm(V[-1] - V[0])
    if L > M * chord * (1 + 1e-12):
        return False
    s = np.unique(np.concatenate([np.linspace(0, L, _CURVE_SAMPLES), cum]))
    d = domain.signed_distance(_point_at(V, cum, s))
    if np.any(d[1:-1] <= 0):
        return False
    return bool(np.all(np.minimum(s, L - s) <= M * d * (1 + 1e-12)))


def _candidate_curves(domain, x, y):
    yield np.vstack([x, y])
    D = np.linalg.norm(y - x)
    mid = 0.5 * (x + y)
    foot_mid = domain.project(mid.reshape(1, -1))[0]
    foot_x = domain.project(x.reshape(1, -1))[0]
    for frac in (1.0, 0.75, 0.5, 0.35, 0.25):
        a = corkscrew(domain, foot_mid, 2 * frac * D, check=False)
        yield np.vstack([x, a, y])
    for frac in (0.5, 0.35, 0.25, 0.75, 1.0):
        a = corkscrew(domain, foot_x, 2 * (frac * D + domain.distance(x)), check=False)
        yield np.vstack([x, a, y])
        b = corkscrew(domain, domain.project(y.reshape(1, -1))[0],
                      2 * max(domain.distance(y), frac * D), check=False)
        yield np.vstack([x, a, b, y])


def _place(a, b, rho):
    """Arc positions in [a, b) with spacing strictly below rho."""
    m = int(math.floor((b - a) / rho * (1 + 1e-3))) + 1
    return a + (b - a) * np.arange(m) / m


def cover_curve(domain, x, y, r, N):
    """Cover a uniform curve from x to y with admissible balls.

    The initial arc of length about ``r/32`` is split into dyadic
    segments of lengths ``2^{-k+j-5} r`` covered by ``N + 1`` balls of
    radius ``N^{-1} 2^{-k+j-5} r``; the rest is covered by balls of radius
    ``r/N``.  Consecutive centers are closer than the earlier radius.

    Parameters
    ----------
    domain : Domain
    x, y : array_like
        Start and end point; ``d(y, boundary) >= r/4``.
    r : float
    N : int
        Balls per dyadic segment, at least ``2^9 M``.

    Raises
    ------
    NTooSmall
        If ``N < 2^9 M``.
    NoCurve
        If no candidate curve satisfies the uniform-curve conditions.
    HypothesisViolation
        If x or y is outside the domain, ``d(y) < r/4`` or the smallest
        radius is too close to floating-point resolution.
    """
    M = domain.M
    if int(N) != N or N < 2 ** 9 * M:
        raise NTooSmall(f"N={N} < 2^9 M = {2 ** 9 * M}")
    N = int(N)
    if not r > 0:
        raise OutOfRange("r must be positive")
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    rho = domain.distance(x)
    if rho <= 0 or domain.distance(y) <= 0:
        raise HypothesisViolation("x, y in domain", f"d(x)={rho}, d(y)={domain.distance(y)}")
    if domain.distance(y) < r / 4 * (1 - 1e-12):
        raise HypothesisViolation("d(y) >= r/4", f"d(y)={domain.distance(y)}, r/4={r / 4}")
    k = int(math.ceil(math.log2(8 * r / rho) - 1e-12))
    while 2.0 ** (-k) * r > rho / 8 * (1 + 1e-12):
        k += 1
    while 2.0 ** (-k + 1) * r <= rho / 8:
        k -= 1
    floor = 1e4 * np.finfo(float).eps * (domain.scale + float(np.max(np.abs(x))))
    if 2.0 ** (-k - 5) * r / N < floor:
        raise HypothesisViolation("cover resolution",
                                  f"smallest radius {2.0 ** (-k - 5) * r / N:.3g} is below {floor:.3g}")

    if np.array_equal(x, y):
        c = x.reshape(1, -1)
        return ChainCover(c, np.array([rho / 8]), c.copy(), N, k, float(r), rho,
                          np.array([-3]), domain)

    V = None
    for cand in _candidate_curves(domain, x, y):
        if _curve_ok(domain, cand, M):
            V = cand
            break
    if V is None:
        raise NoCurve(f"no uniform curve from {x} to {y} with M={M}")
    cum = _arclength(V)
    L = cum[-1]
    s_list, r_list, piece = [], [], []

    def add(a, b, radius, label):
        s = _place(a, b, radius)
        s_list.append(s)
        r_list.append(np.full(len(s), radius))
        piece.append(np.full(len(s), label))

    if L <= 2 ** -4 * r:
        dmin = domain.signed_distance(_point_at(V, cum, np.linspace(0, L, _CURVE_SAMPLES))).min()
        add(0.0, L, dmin / 5, -3)
    else:
        start = 0.0
        if k >= 1:
            for j in range(k):
                ell = 2.0 ** (-k + j - 5) * r
                add(start, start + ell, ell / N, j)
                start += ell
        add(start, L - 2 ** -5 * r, r / N, -1)
        add(L - 2 ** -5 * r, L, r / N, -2)
    s = np.concatenate(s_list + [[L]])
    radii = np.concatenate(r_list + [r_list[-1][-1:]])
    labels = np.concatenate(piece + [piece[-1][-1:]])
    centers = _point_at(V, cum, s)
    centers[0], centers[-1] = x, y
    cover = ChainCover(centers, radii, V, N, k, float(r), rho, labels.astype(int), domain)
    if not cover.invariants()["admissible"]:
        raise NoCurve("curve found but its cover is not admissible")
    return cover


# ---------------------------------------------------------------------------
# schedules


@dataclass
class ChainSchedule:
    """Times and truncation levels of a weak forward chain.

    ``times[j+1] = times[j] + c1 levels[j]^{2-p} r^p``,
    ``levels[j] = c2^{-j} Lambda``; ``tau_k = c1 sum_{j<=k} c2^{j(p-2)}``
    so that ``times[-1] = times[0] + tau_k Lambda^{2-p} r^p``.
    """

    times: np.ndarray
    levels: np.ndarray
    tau: float
    r: float
    c1: float
    c2: float
    p: float


def forward_schedule(Lam, r, k, c1, c2, pparams, t0=0.0):
    """Build the schedule of a weak forward chain with ``k + 1`` balls.

    Raises
    ------
    OutOfRange
        For non-positive level, radius or ``c1``, ``c2 <= 1`` or ``k < 0``.
    """
    p = pparams.p if isinstance(pparams, PParams) else float(pparams)
    if not (Lam > 0 and r > 0 and c1 > 0):
        raise OutOfRange("level, radius and c1 must be positive")
    if not c2 > 1:
        raise OutOfRange("c2 must exceed 1")
    if int(k) != k or k < 0:
        raise OutOfRange("k must be a non-negative integer")
    k = int(k)
    j = np.arange(k + 2)
    levels = Lam * c2 ** (-j.astype(float))
    if p == 2:
        tau = c1 * (k + 1)
        steps = np.full(k + 1, c1 * r ** 2)
    else:
        tau = c1 * float(np.sum(c2 ** (np.arange(k + 1) * (p - 2))))
        steps = c1 * levels[:-1] ** (2 - p) * r ** p
    times = t0 + np.concatenate([[0.0], np.cumsum(steps)])
    return ChainSchedule(times, levels, tau, float(r), float(c1), float(c2), p)


# ---------------------------------------------------------------------------
# local Harnack checks


def _ratio(num, den):
    if den > 0:
        return num / den
    return math.inf if num > 0 else 0.0


def _view(field, domain, h, t_range):
    return view(field, domain=domain, h=h, t_range=t_range)


def check_harnack(field, x0, t0, r, variant="intrinsic", c_h_grid=None, C1=None,
                  budget=None, domain=None, h=None, t_range=None):
    """Fit the constant of a local Harnack inequality at one point.

    ``intrinsic``: for each ``c_h`` in the grid with an admissible
    cylinder, ``C_h = u(x0, t0) / inf_{B_r} u(., t0 + theta r^p)`` with
    ``theta = (c_h / u(x0, t0))^{p-2}``; the pair minimizing ``C_h`` is
    reported.

    ``weak``: with declared ``C1`` and ``m`` the mean of ``u(., t0)`` on
    ``B_r(x0)``, ``T1 = min(T - t0, C1 r^p m^{2-p})`` and
    ``Q = B_{2r} x (t0 + T1/2, t0 + T1)``; the fitted ``C2`` is the
    smallest constant with ``m <= (1/2)(C1 r^p / (T - t0))^{1/(p-2)} +
    C2 inf_Q u``.

    Raises
    ------
    GeometryViolation
        If ``B_{4r}(x0)`` leaves the domain or no cylinder fits in time.
    NonPositiveValue
        If the anchor value (or mean) is not positive.
    """
    F = _view(field, domain, h, t_range)
    p = F.p
    x0 = np.atleast_1d(np.asarray(x0, float))
    if F.domain.distance(x0) < 4 * r * (1 - 1e-12):
        raise GeometryViolation(f"B_4r(x0) leaves the domain (d={F.domain.distance(x0)}, 4r={4 * r})")
    cfg = {"variant": variant, "x0": x0.tolist(), "t0": float(t0), "r": float(r), "p": p}
    if variant == "intrinsic":
        grid = tuple(c_h_grid or DEFAULTS["c_h_grid"])
        budget = DEFAULTS["C_h_budget"] if budget is None else budget
        u0 = F.value(x0, t0)
        if not u0 > 0:
            raise NonPositiveValue(f"u(x0, t0) = {u0}")
        rows = []
        for c_h in grid:
            theta = (c_h / u0) ** (p - 2)
            half = theta * (4 * r) ** p
            if t0 - half < F.t_start - 1e-12 or t0 + half > F.t_end + 1e-12:
                continue
            inf = F.ball_inf(x0, r, t0 + theta * r ** p)
            rows.append((float(c_h), _ratio(u0, inf), inf, theta))
        if not rows:
            raise GeometryViolation("no intrinsic cylinder of the c_h grid fits in the time range")
        c_h, C_h, inf, theta = min(rows, key=lambda row: row[1])
        cfg["c_h_grid"] = list(grid)
        return InequalityReport("harnack_intrinsic", u0, inf, C_h, budget, cfg,
                                {"c_h": c_h, "theta": theta,
                                 "sweep": [[a, b] for a, b, _, _ in rows]})
    if variant == "weak":
        C1 = DEFAULTS["C1"] if C1 is None else float(C1)
        budget = DEFAULTS["C2_budget"] if budget is None else budget
        T = F.t_end
        if not t0 < T:
            raise GeometryViolation("t0 must precede the end of the data")
        m = F.ball_mean(x0, r, t0)
        if not m > 0:
            raise NonPositiveValue(f"mean over B_r(x0) is {m}")
        T1 = min(T - t0, C1 * r ** p * m ** (2 - p))
        infQ = F.box_inf(x0, 2 * r, t0 + T1 / 2, t0 + T1)
        base = C1 * r ** p / (T - t0)
        if p == 2:
            extra = 0.0 if base < 1 else (0.5 if base == 1 else math.inf)
        else:
            extra = 0.5 * base ** (1 / (p - 2))
        C2 = _ratio(max(m - extra, 0.0), infQ)
        strict = T1 < T - t0
        details = {"C1": C1, "T1": T1, "extra": extra, "strict_regime": strict,
                   "C2_strict_form": _ratio(m, 2 * infQ) if strict else None}
        cfg["C1"] = C1
        return InequalityReport("harnack_weak", m, infQ, C2, budget, cfg, details)
    raise OutOfRange(f"unknown Harnack variant {variant!r}")


# ---------------------------------------------------------------------------
# chain checks


def _chain_geometry(F, x, y, r, delta, x0):
    dom = F.domain
    if not 0 < delta <= 1:
        raise HypothesisViolation("delta in (0,1]", f"delta={delta}")
    if not 0 < r < dom.r0:
        raise HypothesisViolation("0 < r < r0", f"r={r}, r0={dom.r0}")
    rho = dom.distance(x)
    if not 0 < rho <= r:
        raise HypothesisViolation("0 < d(x) <= r", f"d(x)={rho}, r={r}")
    if dom.distance(y) < r / 4 * (1 - 1e-12):
        raise HypothesisViolation("d(y) >= r/4", f"d(y)={dom.distance(y)}, r/4={r / 4}")
    if x0 is None:
        x0 = dom.project(x.reshape(1, -1))[0]
    x0 = np.atleast_1d(np.asarray(x0, float))
    if not dom.on_boundary(x0, tol=1e-9):
        raise HypothesisViolation("x0 on the boundary", f"d(x0)={dom.distance(x0)}")
    for name, z in (("x", x), ("y", y)):
        if np.linalg.norm(z - x0) >= r:
            raise HypothesisViolation(f"{name} in B_r(x0)", f"|{name} - x0|={np.linalg.norm(z - x0)}")
    return rho, x0


def check_chain(field, x, y, t_or_s, r, delta=1.0, direction="forward_mean", constants=None,
                budget=None, x0=None, domain=None, h=None, t_range=None, n_times=17):
    """Check one boundary Harnack-chain estimate and fit its constant.

    Forward directions anchor at ``t0 = t_or_s``.  With ``L`` the mean of
    ``u(., t0)`` on ``B_{rho/4}(x)`` (``forward_mean``) or ``u(x, t0)``
    (``forward_point``) and the declared ``c2, c3``::

        tau = delta^{p-1} (c2^{-1/delta} (r/rho)^{-c3/delta} L)^{2-p} r^p
        L <= c1^{1/delta} (r/rho)^{c3/delta} inf_{B_{r/16}(y)} u(., t0 + tau)

    and the fitted constant is the smallest ``c1``.

    Backward directions anchor at ``s = t_or_s``.  With declared ``C4,
    C5, c5`` and ``tau = C4 (C5 u(y, s))^{2-p} r^p``, the left side is
    the largest mean on ``B_{rho/4}(x)`` (``backward_mean``) or value
    ``u(x, t)`` (``backward_point``) over ``t`` in the admissible window
    below ``s - delta^{p-1} tau``, and the fitted constant is the smallest
    ``c4`` with ``lhs <= c4^{1/delta} (r/rho)^{c5/delta} u(y, s)``.
    ``backward_point`` also enforces the lower time bound, which uses the
    declared ``c4`` budget and ``c_h``.

    Raises
    ------
    HypothesisViolation
        Naming the failed hypothesis.
    """
    if direction not in DIRECTIONS:
        raise OutOfRange(f"unknown direction {direction!r}")
    F = _view(field, domain, h, t_range)
    p = F.p
    c = dict(DEFAULTS)
    c.update(constants or {})
    budget = c["chain_budget"] if budget is None else float(budget)
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    rho, x0 = _chain_geometry(F, x, y, r, delta, x0)
    q = r / rho
    t_or_s = float(t_or_s)
    cfg = {"direction": direction, "x": x.tolist(), "y": y.tolist(), "t": t_or_s, "r": float(r),
           "delta": float(delta), "rho": rho, "p": p}
    if direction.startswith("forward"):
        t0 = t_or_s
        if not F.t_start <= t0 < F.t_end:
            raise HypothesisViolation("t0 in data range", f"t0={t0}")
        if direction == "forward_mean":
            L = F.ball_mean(x, rho / 4, t0)
            if not L > 0:
                raise HypothesisViolation("mean over B_{rho/4}(x) > 0", f"mean={L}")
        else:
            L = F.value(x, t0)
            if not L > 0:
                raise HypothesisViolation("u(x, t0) > 0", f"u={L}")
            back = (c["c_h"] / L) ** (p - 2) * (delta * rho) ** p
            if not t0 - back > F.t_start:
                raise HypothesisViolation("t0 - (c_h/u)^(p-2) (delta rho)^p > 0",
                                          f"t0={t0}, back={back}")
        tau = delta ** (p - 1) * (c["c2"] ** (-1 / delta) * q ** (-c["c3"] / delta) * L) ** (2 - p) * r ** p
        if not t0 + tau < F.t_end:
            raise HypothesisViolation("t0 + tau < T", f"t0 + tau={t0 + tau}, T={F.t_end}")
        inf = F.ball_inf(y, r / 16, t0 + tau)
        env = q ** (c["c3"] / delta)
        K = _ratio(L, inf * env)
        fitted = K ** delta if math.isfinite(K) else math.inf
        cfg.update({"c2": c["c2"], "c3": c["c3"]})
        return InequalityReport(f"chain_{direction}", L, inf * env, fitted, budget, cfg,
                                {"tau": tau, "inf": inf, "multiplier": _ratio(L, inf)})
    s = t_or_s
    if not s < F.t_end:
        raise HypothesisViolation("time condition: s < T", f"s={s}, T={F.t_end}")
    uys = F.value(y, s)
    if not uys > 0:
        raise HypothesisViolation("u(y, s) > 0", f"u={uys}")
    tau = c["C4"] * (c["C5"] * uys) ** (2 - p) * r ** p
    hi = s - delta ** (p - 1) * tau
    if direction == "backward_mean":
        if not s - F.t_start > tau:
            raise HypothesisViolation("time condition: s in (tau, T)", f"s={s}, tau={tau}")
        lo = s - tau
    else:
        head = (budget ** (1 / delta) / c["c_h"] * q ** (c["c5"] / delta) * uys) ** (2 - p) * (delta * rho) ** p
        lo = max(F.t_start + head, s - tau)
        if lo > hi:
            raise HypothesisViolation("time condition: lower bound <= s - delta^(p-1) tau",
                                      f"lower={lo}, upper={hi}")
    lo = max(lo, F.t_start)
    ts = F.times_in(lo, hi, n_times)
    if direction == "backward_mean":
        vals = [F.ball_mean(x, rho / 4, t) for t in ts]
    else:
        vals = [F.value(x, t) for t in ts]
    i = int(np.argmax(vals))
    lhs = float(vals[i])
    env = q ** (c["c5"] / delta)
    K = _ratio(lhs, uys * env)
    fitted = K ** delta if math.isfinite(K) else math.inf
    cfg.update({"C4": c["C4"], "C5": c["C5"], "c5": c["c5"]})
    return InequalityReport(f"chain_{direction}", lhs, uys * env, fitted, budget, cfg,
                            {"tau": tau, "t_window": [lo, hi], "worst_t": float(ts[i]),
                             "multiplier": _ratio(lhs, uys)})


def check_chain_sweep(field, xs, y, t_or_s, r, deltas=(1.0, 0.5, 0.25), direction="forward_mean",
                      constants=None, budget=None, x0=None, domain=None, h=None, t_range=None):
    """Chain check over a sweep of start points (varying ``rho``) and ``delta``.

    The constants of the chain estimates do not depend on ``delta`` or
    ``rho``, so the constant fitted at ``delta`` must also serve every
    larger ``delta`` in the sweep.  The report's ``fitted_constant`` is the
    maximum over the whole sweep; ``details['envelope']`` lists, for each
    ``delta`` in decreasing order, the largest fit over all ``delta' >=
    delta``, which never decreases as ``delta`` decreases.
    Configurations whose hypotheses fail are recorded and skipped.
    """
    F = _view(field, domain, h, t_range)
    deltas = sorted({float(d) for d in deltas}, reverse=True)
    rows, skipped = [], []
    for x in np.atleast_2d(np.asarray(xs, float)) if F.domain.n > 1 else np.asarray(xs, float).reshape(-1, 1):
        for d in deltas:
            try:
                rep = check_chain(F, x, y, t_or_s, r, d, direction, constants, budget, x0)
            except HypothesisViolation as e:
                skipped.append({"x": x.tolist(), "delta": d, "clause": e.clause})
                continue
            rows.append({"x": x.tolist(), "rho": rep.config["rho"], "delta": d,
                         "fitted": rep.fitted_constant, "lhs": rep.lhs, "rhs": rep.rhs})
    if not rows:
        raise HypothesisViolation("no admissible configuration in the sweep")
    envelope, running = [], 0.0
    for d in deltas:
        fits = [row["fitted"] for row in rows if row["delta"] == d]
        if fits:
            running = max(running, max(fits))
        envelope.append([d, running])
    worst = max(rows, key=lambda row: row["fitted"])
    budget = DEFAULTS["chain_budget"] if budget is None else float(budget)
    cfg = {"direction": direction, "y": np.atleast_1d(y).tolist(), "t": float(t_or_s),
           "r": float(r), "deltas": deltas, "p": F.p}
    return InequalityReport(f"chain_{direction}_sweep", worst["lhs"], worst["rhs"], worst["fitted"],
                            budget, cfg, {"rows": rows, "skipped": skipped, "envelope": envelope})
