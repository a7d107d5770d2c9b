"""Exception types shared across the solver modules."""


class RwsError(Exception):
    """Base class for all library errors."""


class ConfigError(RwsError):
    """Invalid or inconsistent run configuration."""


class DimensionMismatch(RwsError):
    """Grid too coarse for the requested truncation, or shapes disagree."""


class RealityViolation(RwsError):
    """Spectral coefficients do not satisfy u[-l, j] == conj(u[l, j])."""


class GridTooLarge(RwsError):
    """All-pairs diagnostic requested on a grid above the configured cap."""


class NotInRange(RwsError):
    """Field has kernel-mode energy where none is allowed."""


class NotInRangeSpace(NotInRange):
    """Time-average construction applied to data with kernel content."""


class AlphaOutOfRange(RwsError):
    """Strip parameter outside [0, 1/2)."""


class EvenCount(RwsError):
    """Odd-product identity called with an even number of factors."""


class UnknownSymmetryClass(RwsError):
    """Symmetry class is neither 'i' (even) nor 'ii' (odd)."""


class NegativeWeight(RwsError):
    """Coercivity weight takes negative values."""


class NonpositiveM(RwsError):
    """Cutoff threshold must be positive."""


class ZeroShift(RwsError):
    """Difference quotient needs a nonzero shift."""


class EvaluationDomain(RwsError):
    """Forcing evaluated outside its declared domain of validity."""


class SignMismatch(RwsError):
    """beta * H changes sign; the rescaled problem is not normalizable."""


class KappaOutOfRange(RwsError):
    """kappa outside [0, pi]."""


class NoSignChange(RwsError):
    """chi(kappa) - c does not bracket a root on [0, pi]."""


class MaxIterations(RwsError):
    """Fixed-point iteration hit the iteration cap before the tolerance."""

    def __init__(self, message, contraction_estimate=None, last_delta=None):
        super().__init__(message)
        self.contraction_estimate = contraction_estimate
        self.last_delta = last_delta


class Diverged(RwsError):
    """Fixed-point iterate left the a-priori bound."""
