#!/usr/bin/env python3
# The boundary measure of a solution vanishing on the lateral boundary.
#
# Its action on a test function phi is the weak form of the equation
# integrated against phi; on smooth domains it has the density
# |d_nu u|^{p-1}.  Both routes are computed independently here.
#
# Usage: python demos/boundary_measure.py
import numpy as np

from pparabolic import geometry, measure, solver
from pparabolic.closed_forms import PParams, make_closed_form
from pparabolic.measure import TestFunction

# u = x: the measure at x = 0 is dt, so phi = bump in t gives tau * 32/35
g = solver.Grid(geometry.Interval(0, 1), 1 / 256)
lin = solver.sample_closed_form(make_closed_form("Linear", PParams(3.0, 1)), g, np.linspace(0, 1, 11))
phi = TestFunction([0.0], 0.5, 0.3, 0.4)
print(f"u = x: weak action {measure.riesz_apply(lin, phi):.6f}, exact {0.4 * 32 / 35:.6f}")

# a decaying bump at p = 3
prob = solver.build_problem(geometry.Interval(0, 1), PParams(3.0, 1),
                            lambda X: 4 * np.maximum(1 - ((X[:, 0] - 0.5) / 0.3) ** 2, 0) ** 2, None,
                            T=10.0, h=1 / 256)
tr = solver.solve(prob, np.linspace(0, 10, 201), dt=1e-4, growth=1.05, dt_max=0.01)
est = measure.boundary_density(tr, (0.5, 10.0))

print("\n  test function                   weak action   density route")
rng = np.random.default_rng(3)
for phi in measure._bump_family(tr.domain, (0.5, 10.0), 5, rng, 0.25):
    print(f"  c={phi.center[0]:+.3f} s={phi.s:5.2f} tau={phi.tau:4.2f}   "
          f"{measure.riesz_apply(tr, phi):.6e}   {est.apply(phi):.6e}")

# box masses over Q_rho = B_rho x (t - rho^2, t) halve in space and quarter in time
prof = measure.doubling_profile(tr, ([0.0], 8.0), [0.5, 0.25, 0.125, 0.0625])
print("\ndoubling ratios mu(Q_{rho/2}) / mu(Q_rho):", [round(q, 4) for q in prof.ratios], "->", prof.limit)
