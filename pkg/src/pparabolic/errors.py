"""Exception types shared by all modules.

Every error derives from :class:`PParabolicError` so callers (and the
scenario runner) can catch the whole family at once.
"""

__all__ = [
    "PParabolicError",
    "OutOfRange",
    "DegenerateExponent",
    "NonSmoothPoint",
    "OutsideSupport",
    "EmptyRegion",
    "BadSequence",
    "NotOnBoundary",
    "RadiusTooLarge",
    "NTooSmall",
    "NoCurve",
    "GeometryViolation",
    "NonPositiveValue",
    "HypothesisViolation",
    "ShapeMismatch",
    "NegativeDataWhenNonNegDeclared",
    "CflViolation",
    "NewtonDivergence",
    "SupportViolation",
    "ExtensionMissing",
    "NotVanishing",
    "MassTooSmall",
    "WindowTooShort",
    "ConfigError",
    "SwapPerformed",
]


class PParabolicError(Exception):
    """Base class."""


class OutOfRange(PParabolicError, ValueError):
    """A parameter lies outside its admissible range."""


class DegenerateExponent(OutOfRange):
    """p <= 2 was requested for a construction that needs p > 2."""


class NonSmoothPoint(PParabolicError, ValueError):
    """Evaluation point sits on a truncation edge or corner."""


class OutsideSupport(PParabolicError, ValueError):
    """Evaluation point lies outside the support of a closed form."""


class EmptyRegion(PParabolicError, ValueError):
    """A sampling region or probe set is empty."""


class BadSequence(PParabolicError, ValueError):
    """A parameter sequence is not strictly monotone or touches its limit."""


class NotOnBoundary(PParabolicError, ValueError):
    """A point expected on the boundary is not."""


class RadiusTooLarge(PParabolicError, ValueError):
    """Radius exceeds the ball-condition radius of the domain."""


class NTooSmall(PParabolicError, ValueError):
    """Too few balls per dyadic segment for admissibility."""


class NoCurve(PParabolicError, RuntimeError):
    """No admissible connecting curve was found."""


class GeometryViolation(PParabolicError, ValueError):
    """A cylinder or ball leaves the domain or the data time range."""


class NonPositiveValue(PParabolicError, ValueError):
    """A value used as an intrinsic level is not positive."""


class HypothesisViolation(PParabolicError, ValueError):
    """A hypothesis of a checked inequality fails.

    Parameters
    ----------
    clause : str
        Short name of the failed clause.
    detail : str
        Human readable detail.
    """

    def __init__(self, clause, detail=""):
        self.clause = clause
        self.detail = detail
        msg = clause if not detail else f"{clause}: {detail}"
        super().__init__(msg)


class ShapeMismatch(PParabolicError, ValueError):
    """Array shapes are inconsistent with the grid."""


class NegativeDataWhenNonNegDeclared(PParabolicError, ValueError):
    """Negative data where non-negativity was declared."""


class CflViolation(PParabolicError, ValueError):
    """Explicit time step exceeds the stability bound."""


class NewtonDivergence(PParabolicError, RuntimeError):
    """Newton iteration failed after the backtracking floor."""


class SupportViolation(PParabolicError, ValueError):
    """A test function is not supported where required."""


class ExtensionMissing(PParabolicError, ValueError):
    """Field is not extended by zero where a test function needs it."""


class NotVanishing(PParabolicError, ValueError):
    """Field does not vanish on the lateral boundary window."""


class MassTooSmall(PParabolicError, ValueError):
    """Measure of a box is below the quadrature noise floor."""


class WindowTooShort(PParabolicError, ValueError):
    """Fit window holds too few samples."""


class ConfigError(PParabolicError, ValueError):
    """Scenario configuration is invalid.

    Parameters
    ----------
    key : str
        Dotted path of the offending key.
    detail : str
        Reason.
    """

    def __init__(self, key, detail=""):
        self.key = key
        self.detail = detail
        super().__init__(f"{key}: {detail}" if detail else key)


class SwapPerformed(PParabolicError, UserWarning):
    """Informational: the two inputs of a comparison were swapped."""
