"""Finite-difference evolution of ``u_t = div(|grad u|^{p-2} grad u)``.

The spatial operator is the gradient of the discrete p-Dirichlet energy

    E(u) = (1/p) sum_faces w (|G_f u|^2 + eps^2)^{p/2},   w = h^n / n,

where ``G_f u`` is the full gradient at a grid face (normal difference
plus, in 2D, the averaged tangential difference).  ``-grad E / h^n`` is a
conservative flux-form approximation of the p-Laplacian.

Two schemes are provided.  The explicit scheme is a forward Euler step of
this flux form under a CFL bound; in 1D it is monotone and L1
contracting.  The implicit scheme is a proximal step, the minimizer of
``(h^n / 2dt) |v - u|^2 + E(v)``, found by Newton's method with Armijo
backtracking on the sparse Hessian.
"""

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solveh_banded

from .closed_forms import ClosedForm, PParams, values as cf_values
from .errors import (
    CflViolation,
    NegativeDataWhenNonNegDeclared,
    NewtonDivergence,
    OutOfRange,
    ShapeMismatch,
    SupportViolation,
)
from .geometry import Domain, domain_from_spec

__all__ = [
    "Grid",
    "Problem",
    "State",
    "Trajectory",
    "build_problem",
    "cfl_bound",
    "step",
    "solve",
    "sample_closed_form",
    "as_trajectory",
    "change_of_variables",
    "diagnostics",
    "export_trajectory",
    "load_trajectory",
    "INSIDE",
    "BOUNDARY",
    "OUTSIDE",
]

INSIDE, BOUNDARY, OUTSIDE = 0, 1, 2
PAD = 2
NEWTON_TOL = 1e-10


class Grid:
    """Uniform node grid covering a domain's bounding box plus padding.

    Parameters
    ----------
    domain : Domain
    h : float
    clip : (center, radius), optional
        Restrict the interior to ``Omega`` intersected with an open ball.

    Attributes
    ----------
    X : ndarray, shape (N, n)
        Node coordinates in C order.
    mask : ndarray of int
        INSIDE, BOUNDARY (non-interior node touching the stencil of an
        interior node) or OUTSIDE.
    sdist : ndarray
        Signed distance of every node.
    foot : ndarray
        Nearest boundary point of each boundary node.
    """

    def __init__(self, domain, h, clip=None):
        if not h > 0:
            raise OutOfRange("grid spacing must be positive")
        self.domain = domain
        self.h = float(h)
        self.n = domain.n
        self.clip = None if clip is None else (tuple(np.atleast_1d(clip[0]).astype(float)), float(clip[1]))
        lo, hi = (np.asarray(v, float) for v in domain.bbox())
        if self.clip is not None:
            c, r = np.asarray(self.clip[0]), self.clip[1]
            lo, hi = np.maximum(lo, c - r), np.minimum(hi, c + r)
        cells = np.ceil((hi - lo) / self.h - 1e-9).astype(int)
        self.origin = lo - PAD * self.h
        self.dims = tuple(int(c) + 1 + 2 * PAD for c in cells)
        axes = [self.origin[d] + self.h * np.arange(self.dims[d]) for d in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.X = np.column_stack([m.ravel() for m in mesh])
        self.N = self.X.shape[0]
        sd = domain.signed_distance(self.X)
        if self.clip is not None:
            c, r = np.asarray(self.clip[0]), self.clip[1]
            sd = np.minimum(sd, r - np.linalg.norm(self.X - c, axis=1))
        self.sdist = sd
        tol = 1e-12 * max(1.0, domain.scale)
        inside = sd > tol
        near = np.zeros(self.N, dtype=bool)
        idx = np.arange(self.N).reshape(self.dims)
        ins = inside.reshape(self.dims)
        for shift in self._neighbour_shifts():
            near |= _shifted(ins, shift).ravel()
        mask = np.full(self.N, OUTSIDE, dtype=int)
        mask[near & ~inside] = BOUNDARY
        mask[inside] = INSIDE
        self.mask = mask
        self.inside = np.flatnonzero(mask == INSIDE)
        self.boundary = np.flatnonzero(mask == BOUNDARY)
        self.foot = np.full_like(self.X, np.nan)
        if len(self.boundary):
            self.foot[self.boundary] = domain.project(self.X[self.boundary])
        self._idx = idx
        self._ops = None

    def _neighbour_shifts(self):
        if self.n == 1:
            return [(-1,), (1,)]
        return [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]

    @property
    def weight(self):
        """Node quadrature weight h^n."""
        return self.h ** self.n

    def operators(self):
        """Face gradient operators.

        Returns
        -------
        G : list of csr_matrix
            ``G[d] @ u`` is component ``d`` of the face gradients.
        centers : ndarray, shape (F, n)
            Face midpoints.
        w : float
            Face weight h^n / n.
        """
        if self._ops is None:
            self._ops = _build_faces(self)
        return self._ops

    def nodes_in_ball(self, center, radius, which=INSIDE):
        c = np.atleast_1d(np.asarray(center, float))
        d = np.linalg.norm(self.X - c, axis=1)
        sel = d < radius
        if which is not None:
            sel &= self.mask == which
        return np.flatnonzero(sel)

    def locate(self, x):
        """Fractional index of a point."""
        return (np.atleast_1d(np.asarray(x, float)) - self.origin) / self.h

    def interp_weights(self, x):
        """Multilinear interpolation stencil (indices, weights) of a point."""
        f = self.locate(x)
        i0 = np.floor(f).astype(int)
        i0 = np.clip(i0, 0, np.asarray(self.dims) - 2)
        s = f - i0
        idx, wts = [], []
        if self.n == 1:
            for k, wk in ((0, 1 - s[0]), (1, s[0])):
                idx.append(i0[0] + k)
                wts.append(wk)
        else:
            for a, wa in ((0, 1 - s[0]), (1, s[0])):
                for b, wb in ((0, 1 - s[1]), (1, s[1])):
                    idx.append((i0[0] + a) * self.dims[1] + i0[1] + b)
                    wts.append(wa * wb)
        return np.array(idx), np.array(wts)

    def describe(self):
        return {"h": self.h, "dims": list(self.dims), "origin": list(map(float, self.origin)),
                "domain": self.domain.spec(),
                "clip": None if self.clip is None else [list(self.clip[0]), self.clip[1]]}


def _shifted(a, shift):
    """out[i] = a[i + shift] with False outside."""
    out = np.zeros_like(a)
    src = tuple(slice(max(s, 0), a.shape[d] + min(s, 0)) for d, s in enumerate(shift))
    dst = tuple(slice(max(-s, 0), a.shape[d] + min(-s, 0)) for d, s in enumerate(shift))
    out[dst] = a[src]
    return out


def _build_faces(grid):
    h, n = grid.h, grid.n
    idx = grid._idx
    ins = (grid.mask == INSIDE).reshape(grid.dims)
    rows = {d: ([], [], []) for d in range(n)}
    centers = []
    F = 0
    for d in range(n):
        # faces between P and P + e_d
        sl_a = [slice(None)] * n
        sl_b = [slice(None)] * n
        sl_a[d] = slice(0, grid.dims[d] - 1)
        sl_b[d] = slice(1, grid.dims[d])
        A = idx[tuple(sl_a)]
        B = idx[tuple(sl_b)]
        touch = ins[tuple(sl_a)] | ins[tuple(sl_b)]
        if n == 2:
            t = 1 - d
            # tangential neighbours of both ends
            for e in (-1, 1):
                sh = [0, 0]
                sh[t] = e
                touch = touch | _shifted(ins, tuple(sh))[tuple(sl_a)] | _shifted(ins, tuple(sh))[tuple(sl_b)]
            # drop faces whose tangential stencil leaves the array
            valid = np.ones_like(touch)
            sel = [slice(None)] * 2
            sel[t] = slice(0, 1)
            valid[tuple(sel)] = False
            sel[t] = slice(-1, None)
            valid[tuple(sel)] = False
            touch &= valid
        a = A[touch]
        b = B[touch]
        m = len(a)
        f = np.arange(F, F + m)
        # normal component
        r, c, v = rows[d]
        r += [f, f]
        c += [a, b]
        v += [np.full(m, -1.0 / h), np.full(m, 1.0 / h)]
        if n == 2:
            t = 1 - d
            stride = grid.dims[1] if t == 0 else 1
            r, c, v = rows[t]
            for base in (a, b):
                r += [f, f]
                c += [base + stride, base - stride]
                v += [np.full(m, 0.25 / h), np.full(m, -0.25 / h)]
        centers.append(0.5 * (grid.X[a] + grid.X[b]))
        F += m
    G = []
    for d in range(n):
        r, c, v = rows[d]
        if r:
            G.append(sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
                                   shape=(F, grid.N)))
        else:
            G.append(sp.csr_matrix((F, grid.N)))
    return G, np.concatenate(centers), h ** n / n


# ---------------------------------------------------------------------------
# problem set-up


@dataclass
class Problem:
    domain: Domain
    pp: PParams
    grid: Grid
    initial: np.ndarray
    lateral: object
    T: float
    eps: float
    scheme: str
    t0: float = 0.0
    nonneg: bool = True
    warnings: list = field(default_factory=list)
    lateral_zero: bool = False

    def boundary_values(self, t):
        """Values of all non-interior nodes at time t."""
        idx = np.flatnonzero(self.grid.mask != INSIDE)
        if self.lateral_zero:
            return idx, np.zeros(len(idx))
        return idx, np.asarray(self.lateral(self.grid.X[idx], t), dtype=float).reshape(-1)


@dataclass
class State:
    t: float
    u: np.ndarray


def _as_lateral(lateral, pp):
    if lateral is None:
        return (lambda X, t: np.zeros(len(X))), True
    if isinstance(lateral, ClosedForm):
        return (lambda X, t, f=lateral: cf_values(f, X, t)), False
    if callable(lateral):
        return lateral, False
    c = float(lateral)
    return (lambda X, t: np.full(len(X), c)), c == 0.0


def build_problem(domain, pp, initial, lateral=None, T=1.0, eps=None, scheme="implicit",
                  h=None, grid=None, t0=0.0, nonneg=True):
    """Validate data and build a :class:`Problem`.

    Parameters
    ----------
    domain : Domain
    pp : PParams
    initial : callable, ClosedForm, scalar or array
        Initial data.  Arrays must match the number of grid nodes or the
        number of interior nodes.
    lateral : callable, ClosedForm, scalar or None
        Dirichlet data ``lateral(X, t)`` on non-interior nodes.  ``None``
        means zero.
    T : float
        Horizon.
    eps : float, optional
        Gradient floor; default ``1e-8`` times the data sup.
    scheme : {'explicit', 'implicit'}
    h : float, optional
        Grid spacing (ignored when ``grid`` is given).
    """
    if scheme not in ("explicit", "implicit"):
        raise OutOfRange(f"unknown scheme {scheme!r}")
    if grid is None:
        if h is None:
            raise OutOfRange("give a grid or a spacing h")
        grid = Grid(domain, h)
    if not T > t0:
        raise OutOfRange("horizon must exceed the initial time")
    lat, lat_zero = _as_lateral(lateral, pp)
    X = grid.X
    if isinstance(initial, ClosedForm):
        u0 = cf_values(initial, X, t0)
    elif callable(initial):
        u0 = np.asarray(initial(X), dtype=float).reshape(-1)
    elif np.ndim(initial) == 0:
        u0 = np.full(grid.N, float(initial))
    else:
        arr = np.asarray(initial, dtype=float).reshape(-1)
        if arr.size == grid.N:
            u0 = arr.copy()
        elif arr.size == len(grid.inside):
            u0 = np.zeros(grid.N)
            u0[grid.inside] = arr
        else:
            raise ShapeMismatch(f"initial data has {arr.size} values; grid has {grid.N} nodes "
                                f"({len(grid.inside)} interior)")
    if u0.shape != (grid.N,):
        raise ShapeMismatch("initial data does not match the grid")
    prob = Problem(domain, pp, grid, u0, lat, float(T), 0.0, scheme, float(t0), nonneg,
                   lateral_zero=lat_zero)
    idx, bv = prob.boundary_values(t0)
    if nonneg and (np.any(u0[grid.inside] < 0) or np.any(bv < 0)):
        raise NegativeDataWhenNonNegDeclared("negative data with nonneg=True")
    # project onto the mask; mismatches are warnings only
    bnd = grid.mask[idx] == BOUNDARY
    gap = np.abs(u0[idx] - bv)[bnd]
    scale = max(np.abs(u0).max(initial=0.0), np.abs(bv).max(initial=0.0))
    if gap.size and gap.max() > 1e-8 * max(scale, 1e-300):
        prob.warnings.append(f"initial and lateral data differ by up to {gap.max():.3g} on boundary nodes")
    u0[idx] = bv
    prob.initial = u0
    if eps is None:
        eps = 1e-8 * scale if scale > 0 else 1e-8
    if not (eps > 0 and (scale == 0 or eps <= 1e-2 * scale)):
        raise OutOfRange(f"eps must lie in (0, 1e-2 * data scale], got {eps}")
    prob.eps = float(eps)
    return prob


# ---------------------------------------------------------------------------
# discrete operator


def _face_gradients(grid, u):
    G, _, _ = grid.operators()
    return [Gd @ u for Gd in G]


def _energy(grid, u, p, eps):
    g = _face_gradients(grid, u)
    s = sum(gd * gd for gd in g) + eps * eps
    _, _, w = grid.operators()
    return w / p * np.sum(s ** (p / 2))


def _energy_grad(grid, u, p, eps):
    """Gradient of E with respect to all nodal values, and face data."""
    G, _, w = grid.operators()
    g = [Gd @ u for Gd in G]
    s = sum(gd * gd for gd in g) + eps * eps
    a = s ** ((p - 2) / 2)
    grad = w * sum(Gd.T @ (a * gd) for Gd, gd in zip(G, g))
    return grad, g, s, a


def cfl_bound(u, problem):
    """Largest stable explicit step ``h^2 / (2 n (p-1) max a)``."""
    grid = problem.grid
    p = problem.pp.p
    _, _, _, a = _energy_grad(grid, u, p, problem.eps)
    amax = a.max(initial=0.0)
    if amax <= 0:
        return np.inf
    return grid.h ** 2 / (2 * grid.n * (p - 1) * amax)


def step(state, dt, problem, check_cfl=True, tol=NEWTON_TOL):
    """Advance one step of size ``dt``.

    Raises
    ------
    CflViolation
        Explicit step above the CFL bound.
    NewtonDivergence
        Implicit step that fails to converge.
    """
    if not dt > 0:
        raise OutOfRange("dt must be positive")
    if problem.scheme == "explicit":
        return _explicit_step(state, dt, problem, check_cfl)
    return _implicit_step(state, dt, problem, tol)


def _explicit_step(state, dt, problem, check_cfl):
    grid = problem.grid
    p = problem.pp.p
    u = state.u
    grad, _, _, a = _energy_grad(grid, u, p, problem.eps)
    if check_cfl:
        amax = a.max(initial=0.0)
        bound = np.inf if amax <= 0 else grid.h ** 2 / (2 * grid.n * (p - 1) * amax)
        if dt > bound * (1 + 1e-12):
            raise CflViolation(f"dt={dt:.3g} exceeds the CFL bound {bound:.3g}")
    v = u.copy()
    ins = grid.inside
    v[ins] = u[ins] - dt * grad[ins] / grid.weight
    t1 = state.t + dt
    idx, bv = problem.boundary_values(t1)
    v[idx] = bv
    return State(t1, v)


def _hessian(grid, g, s, a, p, ins):
    G, _, w = grid.operators()
    Gi = [Gd[:, ins] for Gd in G]
    c = (p - 2) * s ** ((p - 4) / 2)
    H = None
    n = len(G)
    for i in range(n):
        for j in range(n):
            d = c * g[i] * g[j]
            if i == j:
                d = d + a
            term = Gi[i].T @ sp.diags(d) @ Gi[j]
            H = term if H is None else H + term
    return w * H


def _solve_spd(H, b, n):
    """Solve a symmetric positive definite Newton system.

    1D systems are tridiagonal and go to a banded Cholesky solver; 2D
    systems use Jacobi-preconditioned conjugate gradients (the mass term
    keeps them well conditioned), with a direct fallback.
    """
    if n == 1:
        ab = np.zeros((2, H.shape[0]))
        ab[0, 1:] = H.diagonal(1)
        ab[1] = H.diagonal(0)
        return solveh_banded(ab, b)
    d = H.diagonal()
    x, info = spla.cg(H, b, rtol=1e-8, atol=0.0, M=sp.diags(1.0 / d), maxiter=20 * len(b))
    if info != 0:
        x = spla.spsolve(H.tocsc(), b)
    return x


def _implicit_step(state, dt, problem, tol):
    grid = problem.grid
    p, eps = problem.pp.p, problem.eps
    ins = grid.inside
    u = state.u
    t1 = state.t + dt
    v = u.copy()
    idx, bv = problem.boundary_values(t1)
    v[idx] = bv
    m = grid.weight / dt
    scale = max(np.abs(u).max(initial=0.0), np.abs(bv).max(initial=0.0))
    if scale == 0:
        return State(t1, v)

    def phi(x):
        return 0.5 * m * np.sum((x[ins] - u[ins]) ** 2) + _energy(grid, x, p, eps)

    f = phi(v)
    for it in range(100):
        gE, g, s, a = _energy_grad(grid, v, p, eps)
        r = m * (v[ins] - u[ins]) + gE[ins]
        # residual in units of the data: (v - u) + dt * grad E / h^n
        if np.abs(r).max() / m <= tol * scale:
            return State(t1, v)
        H = _hessian(grid, g, s, a, p, ins) + m * sp.identity(len(ins), format="csr")
        dx = _solve_spd(H, -r, grid.n)
        slope = float(r @ dx)
        lam = 1.0
        while True:
            trial = v.copy()
            trial[ins] += lam * dx
            ft = phi(trial)
            if ft <= f + 1e-4 * lam * slope or abs(ft - f) <= 1e-15 * abs(f):
                break
            lam *= 0.5
            if lam < 1e-10:
                raise NewtonDivergence(f"line search failed at t={t1:.6g}")
        v, f = trial, ft
    raise NewtonDivergence(f"Newton did not converge at t={t1:.6g}")


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Time-stamped nodal fields on a grid.

    ``U[k]`` holds all node values at ``times[k]``; non-interior nodes carry
    the lateral data (zero for boundary-vanishing runs, which is the
    extension by zero).
    """

    grid: Grid
    pp: PParams
    times: np.ndarray
    U: np.ndarray
    meta: dict = field(default_factory=dict)
    dt_history: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.U = np.asarray(self.U, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise OutOfRange("snapshot times must be strictly increasing")
        if self.U.shape != (len(self.times), self.grid.N):
            raise ShapeMismatch("snapshot array does not match grid and times")

    @property
    def domain(self):
        return self.grid.domain

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    def at(self, t):
        """Nodal field at time t (linear interpolation between snapshots).

        Returns
        -------
        (u, interpolated)
        """
        t = float(t)
        ts = self.times
        if t < ts[0] - 1e-12 * max(1, abs(ts[0])) or t > ts[-1] + 1e-12 * max(1, abs(ts[-1])):
            raise OutOfRange(f"t={t} outside [{ts[0]}, {ts[-1]}]")
        k = int(np.searchsorted(ts, t))
        if k < len(ts) and ts[k] == t:
            return self.U[k], False
        k = min(max(k, 1), len(ts) - 1)
        s = (t - ts[k - 1]) / (ts[k] - ts[k - 1])
        return (1 - s) * self.U[k - 1] + s * self.U[k], True

    def value(self, x, t):
        """Field value at an arbitrary point (multilinear in space)."""
        u, _ = self.at(t)
        idx, w = self.grid.interp_weights(x)
        return float(u[idx] @ w)

    def sup(self):
        """Sup over interior nodes at each snapshot."""
        ins = self.grid.inside
        return self.U[:, ins].max(axis=1) if len(ins) else np.zeros(len(self.times))

    def scaled(self, lam):
        """Intrinsic rescaling ``(u, t) -> (lam u, lam^{2-p} t)``."""
        p = self.pp.p
        meta = dict(self.meta)
        meta["scaled_by"] = meta.get("scaled_by", 1.0) * lam
        return Trajectory(self.grid, self.pp, self.times * lam ** (2 - p), self.U * lam, meta,
                          self.dt_history * lam ** (2 - p))

    def window(self, t_lo, t_hi):
        """Indices of snapshots with ``t_lo <= t <= t_hi``."""
        return np.flatnonzero((self.times >= t_lo) & (self.times <= t_hi))


def solve(problem, snapshot_times=None, dt=None, growth=1.0, dt_max=None, cfl_safety=0.9,
          record_steps=False, max_steps=10_000_000):
    """Integrate a problem and return a :class:`Trajectory`.

    Parameters
    ----------
    snapshot_times : array_like, optional
        Times to store (steps are clipped to hit them exactly).  Default:
        initial time and horizon.
    dt : float, optional
        Implicit step size (default ``(T - t0)/100``).  Ignored by the
        explicit scheme, which uses ``cfl_safety`` times the CFL bound.
    growth : float
        Geometric growth factor for implicit steps.
    dt_max : float, optional
        Cap on implicit steps.
    record_steps : bool
        Store every step as a snapshot.
    """
    t0, T = problem.t0, problem.T
    if snapshot_times is None:
        snapshot_times = [t0, T]
    snaps = np.unique(np.asarray(snapshot_times, dtype=float))
    span = T - t0
    if snaps[0] < t0 - 1e-12 * span or snaps[-1] > T + 1e-12 * span:
        raise OutOfRange("snapshot times must lie in [t0, T]")
    snaps = np.clip(snaps, t0, T)
    state = State(t0, problem.initial.copy())
    times, U, dts = [], [], []
    if snaps[0] == t0:
        times.append(t0)
        U.append(state.u.copy())
        snaps = snaps[1:]
    if problem.scheme == "implicit":
        h_dt = float(dt) if dt is not None else span / 100
    k = 0
    nsteps = 0
    while k < len(snaps):
        target = snaps[k]
        remaining = target - state.t
        d = cfl_safety * cfl_bound(state.u, problem) if problem.scheme == "explicit" else h_dt
        if d >= remaining * (1 - 1e-9):
            d = remaining
        d_try = d
        while True:
            try:
                new = step(state, d_try, problem)
                break
            except NewtonDivergence:
                d_try *= 0.5
                if d_try < 1e-14 * span:
                    raise
        landed = d_try == remaining
        if landed:
            new = State(target, new.u)
        state = new
        dts.append(d_try)
        nsteps += 1
        if problem.scheme == "implicit" and d_try == d and d == h_dt:
            h_dt = h_dt * growth
            if dt_max is not None:
                h_dt = min(h_dt, dt_max)
        elif problem.scheme == "implicit" and d_try < d:
            h_dt = d_try
        if landed:
            times.append(state.t)
            U.append(state.u.copy())
            k += 1
        elif record_steps:
            times.append(state.t)
            U.append(state.u.copy())
        if nsteps > max_steps:
            raise OutOfRange("step budget exhausted")
    meta = {"scheme": problem.scheme, "h": problem.grid.h, "eps": problem.eps,
            "p": problem.pp.p, "n": problem.pp.n, "interpolated": False,
            "lateral_zero": problem.lateral_zero, "reaction": 0.0,
            "warnings": list(problem.warnings)}
    return Trajectory(problem.grid, problem.pp, np.array(times), np.array(U), meta, np.array(dts))


def sample_closed_form(form, grid, times, zero_outside=True):
    """Sample a closed form on grid nodes at the given times.

    Values at nodes outside the domain are set to zero when
    ``zero_outside`` (the extension by zero of a boundary-vanishing field).
    """
    times = np.asarray(times, dtype=float)
    U = np.empty((len(times), grid.N))
    for k, t in enumerate(times):
        v = cf_values(form, grid.X, t)
        if zero_outside:
            v = np.where(grid.mask == INSIDE, v, np.where(grid.sdist >= 0, v, 0.0))
        U[k] = v
    meta = {"scheme": "closed_form", "family": form.family, "h": grid.h, "p": form.pp.p,
            "n": form.pp.n, "interpolated": False, "lateral_zero": False, "reaction": 0.0}
    return Trajectory(grid, form.pp, times, U, meta)


def as_trajectory(field, domain=None, h=None, times=None, grid=None):
    """Return ``field`` if it is a trajectory, else sample a closed form."""
    if isinstance(field, Trajectory):
        return field
    if isinstance(field, ClosedForm):
        if grid is None:
            if domain is None or h is None:
                raise OutOfRange("sampling a closed form needs a domain and h (or a grid)")
            grid = Grid(domain, h)
        if times is None:
            raise OutOfRange("sampling a closed form needs snapshot times")
        return sample_closed_form(field, grid, times)
    raise OutOfRange(f"cannot interpret {type(field).__name__} as a field")


# ---------------------------------------------------------------------------
# change of variables


def change_of_variables(traj, C):
    """``w(x, tau) = g(f(tau)) u(x, f(tau))``.

    With ``f(tau) = (exp(C(p-2)tau) - 1)/(C(p-2))`` and
    ``g(eta) = (C(p-2)eta + 1)^{1/(p-2)}`` (``f = tau``, ``g = exp(C eta)``
    at p = 2), ``w`` solves ``w_tau = Delta_p w + C w``.  Snapshot times
    t are mapped to ``tau = f^{-1}(t)``.
    """
    if not C > 0:
        raise OutOfRange("C must be positive")
    p = traj.pp.p
    t = traj.times
    if p == 2:
        tau = t.copy()
        mult = np.exp(C * t)
    else:
        k = C * (p - 2)
        if np.any(k * t + 1 <= 0):
            raise OutOfRange("snapshot times outside the image of f")
        tau = np.log1p(k * t) / k
        mult = (k * t + 1) ** (1 / (p - 2))
    meta = dict(traj.meta)
    meta["reaction"] = float(C)
    meta["change_of_variables"] = float(C)
    return Trajectory(traj.grid, traj.pp, tau, traj.U * mult[:, None], meta)


# ---------------------------------------------------------------------------
# weak-form diagnostics


def _trapezoid_weights(ts):
    w = np.zeros(len(ts))
    d = np.diff(ts)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def diagnostics(traj, testfn, C=None):
    """Weak residual and Caccioppoli quantities against a test function.

    Returns
    -------
    dict
        ``weak_residual``: quadrature of ``-u phi_t + |grad u|^{p-2} grad u
        . grad phi - C u phi``; ``caccioppoli``: ``(lhs, rhs_terms)`` with
        lhs ``int |grad u|^p phi^p`` and rhs terms ``int u^p |grad phi|^p``,
        ``int u^2 (phi_t)_+ phi^{p-1}``; ``fitted_C``: lhs over the sum of the
        rhs terms.
    """
    grid = traj.grid
    p = traj.pp.p
    if C is None:
        C = traj.meta.get("reaction", 0.0)
    if testfn.t_lo < traj.t_start or testfn.t_hi > traj.t_end:
        raise SupportViolation("test function leaves the time range of the data")
    if grid.domain.distance(testfn.center) < testfn.radius * (1 - 1e-12):
        raise SupportViolation("test function is not supported inside the domain")
    if grid.clip is not None:
        c, r = np.asarray(grid.clip[0]), grid.clip[1]
        if np.linalg.norm(np.asarray(testfn.center) - c) + testfn.radius > r:
            raise SupportViolation("test function is not supported inside the domain")
    G, centers, w = grid.operators()
    tw = _trapezoid_weights(traj.times)
    X = grid.X
    res = lhs = i1 = i2 = 0.0
    for k, t in enumerate(traj.times):
        if tw[k] == 0:
            continue
        u = traj.U[k]
        phi_n = testfn.value(X, t)
        if not np.any(phi_n) and not np.any(testfn.value(centers, t)):
            continue
        phit_n = testfn.dt(X, t)
        g = [Gd @ u for Gd in G]
        s = sum(gd * gd for gd in g)
        a = s ** ((p - 2) / 2)
        gphi = testfn.grad(centers, t)
        phi_f = testfn.value(centers, t)
        flux = sum(a * gd * gphi[:, d] for d, gd in enumerate(g))
        nodal = grid.weight * np.sum(-u * phit_n - C * u * phi_n)
        res += tw[k] * (nodal + w * np.sum(flux))
        lhs += tw[k] * w * np.sum(s ** (p / 2) * phi_f ** p)
        i1 += tw[k] * grid.weight * np.sum(np.abs(u) ** p * np.linalg.norm(testfn.grad(X, t), axis=1) ** p)
        i2 += tw[k] * grid.weight * np.sum(u ** 2 * np.maximum(phit_n, 0) * phi_n ** (p - 1))
    fitted = lhs / (i1 + i2) if i1 + i2 > 0 else np.inf
    return {"weak_residual": float(res), "caccioppoli": (float(lhs), (float(i1), float(i2))),
            "fitted_C": float(fitted)}


# ---------------------------------------------------------------------------
# export / import

MAGIC = b"PPTRAJ01"


def export_trajectory(traj, path, fmt="csv"):
    """Write a trajectory as CSV or as the binary snapshot format.

    CSV: a ``#``-prefixed JSON metadata line, then rows
    ``t,node,x0[,x1],value,kind``.

    Binary (little endian): magic ``PPTRAJ01``; uint32 ndim; uint32 dims[ndim];
    float64 h; float64 origin[ndim]; uint64 nt; float64 times[nt]; uint32
    length of a UTF-8 JSON metadata block and the block; float64
    values[nt * prod(dims)] in C order.
    """
    meta = _export_meta(traj)
    if fmt == "csv":
        kinds = np.array(["inside", "boundary", "outside"])[traj.grid.mask]
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            cols = ["t", "node"] + [f"x{d}" for d in range(traj.grid.n)] + ["value", "kind"]
            fh.write(",".join(cols) + "\n")
            for k, t in enumerate(traj.times):
                for i in range(traj.grid.N):
                    xs = ",".join(repr(float(c)) for c in traj.grid.X[i])
                    fh.write(f"{float(t)!r},{i},{xs},{float(traj.U[k, i])!r},{kinds[i]}\n")
        return path
    if fmt in ("bin", "binary"):
        g = traj.grid
        blob = json.dumps(meta, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", g.n))
            fh.write(struct.pack(f"<{g.n}I", *g.dims))
            fh.write(struct.pack("<d", g.h))
            fh.write(struct.pack(f"<{g.n}d", *g.origin))
            fh.write(struct.pack("<Q", len(traj.times)))
            fh.write(np.asarray(traj.times, "<f8").tobytes())
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(np.asarray(traj.U, "<f8").tobytes())
        return path
    raise OutOfRange(f"unknown export format {fmt!r}")


def _export_meta(traj):
    g = traj.grid
    meta = {k: v for k, v in traj.meta.items() if isinstance(v, (int, float, str, bool, list)) or v is None}
    meta.update({"domain": g.domain.spec(), "p": traj.pp.p, "n": traj.pp.n, "h": g.h,
                 "clip": None if g.clip is None else [list(g.clip[0]), g.clip[1]]})
    return meta


def _grid_from_meta(meta):
    dom = domain_from_spec(meta["domain"])
    clip = meta.get("clip")
    return Grid(dom, meta["h"], clip=None if clip is None else (tuple(clip[0]), clip[1]))


def load_trajectory(path):
    """Read a trajectory written by :func:`export_trajectory`."""
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head == MAGIC:
        with open(path, "rb") as fh:
            buf = fh.read()
        off = 8
        (n,) = struct.unpack_from("<I", buf, off); off += 4
        dims = struct.unpack_from(f"<{n}I", buf, off); off += 4 * n
        (h,) = struct.unpack_from("<d", buf, off); off += 8
        off += 8 * n  # origin, rebuilt from the domain
        (nt,) = struct.unpack_from("<Q", buf, off); off += 8
        times = np.frombuffer(buf, "<f8", nt, off).copy(); off += 8 * nt
        (lb,) = struct.unpack_from("<I", buf, off); off += 4
        meta = json.loads(buf[off:off + lb].decode()); off += lb
        grid = _grid_from_meta(meta)
        if tuple(grid.dims) != tuple(dims):
            raise ShapeMismatch("stored dims do not match the rebuilt grid")
        U = np.frombuffer(buf, "<f8", nt * grid.N, off).reshape(nt, grid.N).copy()
    else:
        with open(path) as fh:
            first = fh.readline()
            meta = json.loads(first[1:].strip())
            text = fh.read()
        grid = _grid_from_meta(meta)
        data = np.genfromtxt(io.StringIO(text), delimiter=",", names=True, dtype=None, encoding=None)
        t = np.asarray(data["t"], float)
        times = np.unique(t)
        U = np.asarray(data["value"], float).reshape(len(times), grid.N)
    pp = PParams(meta["p"], meta["n"])
    keep = {k: v for k, v in meta.items() if k not in ("domain", "clip")}
    return Trajectory(grid, pp, times, U, keep)
