"""Exception hierarchy shared across the engine."""


class RiskPoolError(Exception):
    """Base class for every error raised by riskpool."""


class DomainError(RiskPoolError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class CapabilityError(RiskPoolError):
    """The operation is well defined but not supported for these inputs."""


class InvariantViolation(RiskPoolError, AssertionError):
    """An internal consistency check failed."""
