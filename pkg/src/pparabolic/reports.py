"""Outcome records shared by every estimate check."""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["InequalityReport", "jsonable"]


def jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``
    so that reports stay strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


@dataclass
class InequalityReport:
    """Result of checking ``lhs <= C * rhs`` on a sampled configuration.

    Parameters
    ----------
    check : str
        Check identifier.
    lhs, rhs : float
        The two sides at the worst sampled configuration.
    fitted_constant : float
        Smallest constant making the inequality hold over all samples.
    budget : float
        Declared constant the fit is compared with.
    config : dict
        Parameters that produced the report.
    details : dict
        Check specific extras (sweeps, sub-fits, flags).
    """

    check: str
    lhs: float
    rhs: float
    fitted_constant: float
    budget: float
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.fitted_constant <= self.budget)

    @property
    def margin(self):
        f = self.fitted_constant
        if f == 0:
            return math.inf
        if not math.isfinite(f):
            return 0.0
        return self.budget / f

    def to_dict(self):
        return jsonable({
            "check": self.check,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "fitted_constant": self.fitted_constant,
            "budget": self.budget,
            "pass": self.passed,
            "margin": self.margin,
            "config": self.config,
            "details": self.details,
        })
