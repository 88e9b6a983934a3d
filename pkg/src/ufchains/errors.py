"""Shared exception types.

Every failure mode raised by the toolkit is one of these, so callers (and the
command line driver) can map failures to exit codes without string matching.
"""

from __future__ import annotations

__all__ = [
    "UFChainsError",
    "PresentationError",
    "ResourceError",
    "MarginError",
    "WindowFitError",
    "ContractViolation",
    "MapDomainError",
    "ScenarioError",
]


class UFChainsError(Exception):
    """Base class for all toolkit errors."""


class PresentationError(UFChainsError):
    """Malformed space presentation (unknown kind, bad predicate, bad point)."""


class ResourceError(UFChainsError):
    """A configured budget (window point count, subset enumeration) was exceeded."""


class MarginError(UFChainsError):
    """Window margin too small for the requested radius; result would not be
    ambient-correct."""


class WindowFitError(UFChainsError):
    """Data does not fit the window it was paired with (support outside the
    window, image outside the target window)."""


class ContractViolation(UFChainsError):
    """An operation precondition was violated (wrong degree, empty interior,
    non-integral certificate where an integral one is required)."""


class MapDomainError(UFChainsError):
    """Point map applied outside its declared domain, or a group homomorphism
    with infinite kernel/cokernel."""


class ScenarioError(UFChainsError):
    """Scenario file cannot be parsed or names something unimplemented."""
