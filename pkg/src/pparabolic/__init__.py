"""Numerical laboratory for the degenerate p-parabolic equation.

``u_t = div(|grad u|^{p-2} grad u)`` with ``p > 2``: explicit solutions
and barriers, a monotone finite-difference solver, intrinsic geometry and
Harnack chains, and empirical checks of boundary estimates (Carleson,
decay envelopes, boundary Harnack principles, boundary Riesz measure).
"""

from .closed_forms import PParams, classify_region, eval_jet, make_closed_form, p2_limit_distance
from .geometry import (Annulus, Disc, Interval, Rectangle, corkscrew, domain_from_spec,
                       intrinsic_cylinder, st1pp_satisfied, waiting_time)
from .reports import InequalityReport
from .solver import Grid, Trajectory, build_problem, change_of_variables, diagnostics, solve

__version__ = "0.1.0"

__all__ = [
    "PParams", "make_closed_form", "eval_jet", "classify_region", "p2_limit_distance",
    "Interval", "Rectangle", "Disc", "Annulus", "domain_from_spec", "corkscrew",
    "intrinsic_cylinder", "waiting_time", "st1pp_satisfied",
    "InequalityReport", "Grid", "Trajectory", "build_problem", "solve",
    "change_of_variables", "diagnostics",
]
