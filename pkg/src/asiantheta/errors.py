"""Exception hierarchy shared by all layers.

The CLI maps these onto exit codes, so every failure a caller can provoke
is one of the classes below.
"""


class AsianThetaError(Exception):
    """Base class for library errors."""


class DomainError(AsianThetaError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(AsianThetaError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class UnsupportedConfigurationError(AsianThetaError, ValueError):
    """The requested combination of options is deliberately not implemented."""


class NonConvergenceError(AsianThetaError, ArithmeticError):
    """A series or quadrature failed to reach the requested accuracy."""
