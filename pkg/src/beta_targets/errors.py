"""Exception hierarchy shared by every module.

Each error carries a module-qualified code such as ``beta_dynamics.domain``
so the command line layer can emit machine readable failures.
"""
from __future__ import annotations


class BetaTargetsError(Exception):
    """Base class. Subclasses fix ``kind``; raise sites may set ``module``."""

    kind = "error"

    def __init__(self, message: str, *, module: str = "core"):
        super().__init__(message)
        self.module = module

    @property
    def code(self) -> str:
        return f"{self.module}.{self.kind}"


class DomainError(BetaTargetsError):
    """An argument lies outside the documented domain of an operation."""

    kind = "domain"


class DegenerateInputError(BetaTargetsError):
    """Input is rank deficient or otherwise geometrically degenerate."""

    kind = "degenerate_input"


class ResourceLimitError(BetaTargetsError):
    """A configured node or cell budget would be exceeded."""

    kind = "resource_limit"


class ScaleRangeError(BetaTargetsError):
    """Doubles would under- or overflow; use the log-domain or extended
    precision entry points instead."""

    kind = "scale_range"


class ConsistencyError(BetaTargetsError):
    """An internally asserted, theorem-backed identity failed.

    These indicate a bug (or a numerically hostile input), never a user
    error, and are therefore kept distinct from DomainError.
    """

    kind = "consistency"


class ConfigError(BetaTargetsError):
    """A run configuration failed schema or domain validation."""

    kind = "config"
