"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`KatoError`.
The CLI maps :class:`InputError` subclasses to exit code 2 and
:class:`NumericalError` subclasses to exit code 1.
"""


class KatoError(Exception):
    """Base class for all package errors."""


class InputError(KatoError, ValueError):
    """Malformed or inconsistent input."""


class NumericalError(KatoError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy answer."""


class NonHermitianInput(InputError):
    pass


class NotPositiveSemidefinite(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class BadOrder(InputError):
    """Compound order k outside 1..n."""


class BadAlpha(InputError):
    pass


class DomainError(InputError):
    """A scalar function was asked for a value outside its domain."""


class RequiresVanishingAtZero(InputError):
    pass


class RequiresPositiveDefinite(InputError):
    pass


class TooLarge(InputError):
    pass


class ZeroMap(InputError):
    pass


class ConvergenceFailure(NumericalError):
    """An iterative eigensolver exhausted its sweep budget."""


class NoConvergence(NumericalError):
    """A limit procedure did not settle within its schedule."""


class NonPositiveIterate(NumericalError):
    pass
