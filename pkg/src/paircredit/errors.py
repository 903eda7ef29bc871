"""Exception types shared across the library."""


class PairCreditError(Exception):
    """Base class for all library errors."""


class DomainError(PairCreditError):
    """An input violates a documented precondition (bad parameter, dead firm, |rho| >= 1, ...)."""


class OverflowSignal(PairCreditError):
    """A raw special-function value is not representable in double precision.

    Callers hitting this must switch to the log-scale variant.
    """


class SeriesNoConvergence(PairCreditError):
    """A boundary/survival series hit its term cap before the stopping rule fired."""


class QuadratureFailure(PairCreditError):
    """The adaptive integrator exhausted its subdivision budget without reaching tolerance."""


class NoRoot(PairCreditError):
    """Par-spread bracketing found no sign change within the allowed spread range."""


class DegenerateContract(PairCreditError):
    """A fair-spread ratio is undefined (zero fee leg per unit spread)."""
