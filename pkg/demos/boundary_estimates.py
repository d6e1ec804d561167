#!/usr/bin/env python3
# Carleson and Harnack constants for a solution in the unit disc that
# vanishes on the lower half of the boundary (p = 3).
#
# The lateral data is max(y, 0)^2, so every boundary point with y < 0 is
# a valid site.  Fitted constants must not move under the intrinsic
# rescaling u -> lam u(x, lam^{p-2} t) and should settle under grid halving.
#
# Usage: python demos/boundary_estimates.py   (about 25 s)
import numpy as np

from pparabolic import chains, estimates, geometry, solver
from pparabolic.closed_forms import PParams

pp = PParams(3.0, 2)


def lateral(X, t):
    return np.maximum(X[:, 1], 0.0) ** 2


def initial(X):
    return 4 * np.maximum(1 - np.sum(X ** 2, 1) / 0.64, 0) ** 2 + lateral(X, 0.0)


def run(h):
    prob = solver.build_problem(geometry.Disc((0, 0), 1), pp, initial, lateral, T=20.0, h=h)
    snaps = np.concatenate([[0], np.geomspace(0.01, 20, 50)])
    return solver.solve(prob, snaps, dt=0.002, growth=1.1)


runs = {h: run(h) for h in (1 / 32, 1 / 64)}
for h, tr in runs.items():
    car = estimates.check_carleson(tr, [0, -1], 5.0, 0.5, delta1=[0.5, 0.35, 0.25])
    har = chains.check_harnack(tr, [0, 0], 1.0, 0.1)
    sweep = ", ".join(f"{row['delta1']}: {row['envelope']:.3f}" for row in car.details["sweep"])
    print(f"h = 1/{round(1 / h)}: Carleson K by delta1 [{sweep}], Harnack C_h = {har.fitted_constant:.4f}")

tr = runs[1 / 32]
base = estimates.check_carleson(tr, [0, -1], 5.0, 0.5).fitted_constant
print("\nintrinsic rescaling (the time of the check moves with lam^{2-p}):")
for lam in (0.25, 0.5, 2.0, 8.0):
    K = estimates.check_carleson(tr.scaled(lam), [0, -1], 5.0 / lam, 0.5).fitted_constant
    print(f"  lam = {lam:<5g} K = {K:.15f}  relative change {abs(K / base - 1):.1e}")

osc = estimates.check_oscillation_decay(tr, [0, -1], 5.0, 0.5, 1.0)
print(f"\noscillation decay: sigma = {osc.details['sigma']:.3f}, {osc.details['depth']} halvings (saturated: {osc.details['saturated']})")
