from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from .operators import DensityState


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ModelValidationError(SimulationError):
    """Raised when parameters, operators or observables break a model constraint."""


class ConfigValidationError(ModelValidationError):
    """Raised when a run configuration cannot be resolved."""


class InvariantViolationError(SimulationError):
    """Raised when time evolution leaves the space of valid density matrices."""

    def __init__(
        self,
        message: str,
        invariant: str,
        snapshot: Optional["DensityState"] = None,
    ) -> None:
        super().__init__(message)
        self.invariant = invariant
        self.snapshot = snapshot
