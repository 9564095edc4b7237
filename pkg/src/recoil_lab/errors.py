"""Exception types raised across the package.

Two families: bad inputs (``DomainError``) and numerical guards that trip
during a computation (``NumericalGuardError``). The CLI maps them to exit
codes 2 and 3 respectively.
"""


class RecoilLabError(Exception):
    """Base class for all package errors."""


class DomainError(RecoilLabError, ValueError):
    """An argument is outside the documented domain of an operation."""


class NormalizationError(DomainError):
    """An angular density does not integrate to one over the sphere."""


class BranchMismatchError(DomainError):
    """A decay scenario was passed to an operation for the other branch."""


class NumericalGuardError(RecoilLabError, ArithmeticError):
    """A numerical safeguard rejected the result of a computation."""


class ConvergenceError(NumericalGuardError):
    """An iterative solver hit its iteration cap."""


class ParityViolationError(NumericalGuardError):
    """The emission pattern has a non-zero rest-frame recoil.

    The closed-form friction law drops the rest-frame term, so it would be
    silently wrong for such a pattern.
    """


class DegenerateEpsilonError(NumericalGuardError):
    """The mass ratio is too small to resolve a frequency splitting in float64."""
