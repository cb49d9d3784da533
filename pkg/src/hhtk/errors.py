"""
Exception hierarchy for the Henon-Heiles toolkit.

Every error carries the process exit code the CLI reports for it:
1 for usage/configuration problems, 2 for mathematical failures
(nonzero residuals, unliftable input, inconsistent systems) and 3 for
runtime failures of numerical runs.
"""

from typing import Any, List, Optional


class HHTKError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(HHTKError):
    """Bad model identifiers, parameters or run configuration."""

    exit_code = 1


class MathError(HHTKError):
    """A symbolic computation cannot be carried out or certified."""

    exit_code = 2


class IntegrationError(HHTKError):
    """A numerical run ended in a non-completed state."""

    exit_code = 3


# Configuration errors

class UnknownModel(ConfigError):
    pass


class BadDegrees(ConfigError):
    pass


class InexactValue(ConfigError):
    """A decimal literal was given where an exact rational is required."""


class ParseError(ConfigError):
    pass


class UnboundParameter(ConfigError):
    def __init__(self, names: List[str]):
        self.names = names
        super().__init__(f"unbound parameters: {', '.join(names)}")


# Symbolic kernel errors

class NegativePowerOfSum(MathError):
    pass


class NonMonomialNegativePower(MathError):
    pass


class UnsupportedSideRelation(MathError):
    pass


class DomainError(MathError, ValueError):
    pass


class DivisionByZero(MathError, ZeroDivisionError):
    pass


# Bracket and lift errors

class UnknownSymbol(MathError):
    pass


class WrongMode(MathError):
    pass


class NotLiftable(MathError):
    pass


class Inconsistent(MathError):
    pass


class Underdetermined(MathError):
    """Raised when a unique solution is required but free unknowns remain."""

    def __init__(self, message: str, nullspace: Optional[List[Any]] = None):
        self.nullspace = nullspace or []
        super().__init__(message)


class NoIntegral(MathError):
    exit_code = 1


class NonSeparable(MathError):
    pass


# Numerical run errors

class SingularApproach(IntegrationError):
    pass


class Blowup(IntegrationError):
    pass
