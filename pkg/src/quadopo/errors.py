"""Exception hierarchy shared by all quadopo modules."""


class QuadOPOError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QuadOPOError, ValueError):
    """A parameter violates a physical invariant (sign, positivity, range)."""


class SymmetryError(QuadOPOError, ValueError):
    """A closed form was requested for a parameter set that is not symmetric."""


class MethodMismatch(QuadOPOError, ValueError):
    """A closed-form propagator was asked for couplings outside its symmetry class."""


class DegenerateCovariance(QuadOPOError, ArithmeticError):
    """An optimized-gain denominator vanished."""


class NoConvergence(QuadOPOError, RuntimeError):
    """Mean-field relaxation did not settle within the allotted time."""


class NotAFixedPoint(QuadOPOError, ValueError):
    """Linearization was requested about a state that is not stationary."""


class Unstable(QuadOPOError, RuntimeError):
    """The drift matrix has an eigenvalue with non-negative real part."""


class Diverged(QuadOPOError, FloatingPointError):
    """A positive-P trajectory escaped to very large amplitude."""


class TooManyDivergences(QuadOPOError, RuntimeError):
    """More than the tolerated fraction of trajectories diverged."""
