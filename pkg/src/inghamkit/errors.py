"""Exception hierarchy shared by every module.

The CLI maps each family onto a distinct exit status, so new error types
should subclass one of the four families below rather than ``Exception``.
"""


class InghamError(Exception):
    """Base class for all errors raised by :mod:`inghamkit`."""


class InputError(InghamError, ValueError):
    """Malformed or out-of-range input."""


class CapacityError(InputError):
    """Requested grid exceeds the configured memory budget."""


class ResolutionError(InputError):
    """Grid spacing too coarse for the object being sampled."""


class NearSingularError(InputError):
    """Parameter too close to a singular point of the construction."""


class ValidationError(InputError):
    """A Lie algebra specification violates a structural identity.

    Attributes
    ----------
    violations : list of (str, tuple)
        Name of the violated identity and the offending 1-based index tuple.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ContractError(InghamError):
    """A precondition of a construction does not hold."""


class DomainError(ContractError):
    """Input lies outside the domain where the quantity is defined."""


class UnsupportedStepError(ContractError):
    """Nilpotency step beyond what the implementation covers."""


class NumericError(InghamError, ArithmeticError):
    """A numerical procedure failed to converge or broke down."""
