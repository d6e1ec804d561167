#!/usr/bin/env python3
# The friendly giant u = c_p (T - t)^{-1/(p-2)} x^{p/(p-2)} on (0, 1).
#
# 1. the coefficient c_p and the residual of the closed form;
# 2. the monotone solver against the closed form under grid halving;
# 3. why it defeats a boundary Harnack lower bound against u = x.
#
# Usage: python demos/friendly_giant.py
import numpy as np

from pparabolic import closed_forms, estimates, geometry, solver
from pparabolic.closed_forms import PParams, make_closed_form

p = 3.0
pp = PParams(p, 1)
fg = make_closed_form("FriendlyGiant", pp, {"T": 1.0})
print(f"c_p at p={p}: {closed_forms.friendly_giant_coefficient(p):.12f} (1/36 = {1 / 36:.12f})")

X = np.linspace(0.05, 0.95, 7).reshape(-1, 1)
print("max |residual| on a few points at t=0.5:", np.max(np.abs(closed_forms.evaluate(fg, X, 0.5).residual)))

# explicit scheme, boundary data taken from the closed form itself
print("\n   h        sup error")
prev = None
for h in (1 / 32, 1 / 64, 1 / 128):
    prob = solver.build_problem(geometry.Interval(0, 1), pp, fg, fg, T=0.5, scheme="explicit", h=h)
    tr = solver.solve(prob, [0.0, 0.5])
    ins = tr.grid.mask == solver.INSIDE
    err = np.max(np.abs(tr.U[-1] - closed_forms.values(fg, tr.grid.X, 0.5))[ins])
    order = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
    print(f"  1/{round(1 / h):<4d}  {err:.3e}{order}")
    prev = err

# u/v with v = x behaves like x^{2/(p-2)}: the infimum over thinner bands goes to zero
rep = estimates.bhp_counterexample(p=p)
print("\ninf u/v over bands (0, b):")
for b, v in zip((0.25, 0.125, 0.0625, 0.03125), rep.details["band_inf"]):
    print(f"  b={b:<8g} {v:.3e}")
print("intrinsic condition false everywhere:", rep.details["st1pp_false_everywhere"])
