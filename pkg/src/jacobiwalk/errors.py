"""Exception and warning types shared across the package."""

from __future__ import annotations


class JacobiWalkError(Exception):
    """Base class for all errors raised by jacobiwalk."""


class DomainError(JacobiWalkError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(JacobiWalkError, ValueError):
    """An experiment configuration is malformed or degenerate."""


class ConvergenceError(JacobiWalkError, ArithmeticError):
    """A series or quadrature failed to converge.

    ``details`` carries the arguments of the failed evaluation so the
    caller can reproduce it.
    """

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def __str__(self) -> str:
        base = super().__str__()
        if not self.details:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.details.items())
        return f"{base} ({extra})"


class NumericOverflowError(JacobiWalkError, OverflowError):
    """An intermediate quantity left the representable floating range."""


class QuadratureWarning(UserWarning):
    """Quadrature residual estimate is larger than requested."""
