"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numeric-kernel failures with 3, failed inequality checks with 1.
"""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A system spec or config file is malformed or inconsistent."""


class InsufficientDataError(ValueError):
    """A sample / pair budget is too small for a meaningful estimate."""


class NumericKernelError(RuntimeError):
    """A quadrature or other numeric kernel failed to reach its tolerance."""


class FitUnavailableError(RuntimeError):
    """Too few admissible rows to fit a convergence rate."""
