"""Exception hierarchy shared by the services, the CLI and the HTTP routers."""

from typing import Any, List, Optional


class WCPeriodError(Exception):
    """Base class for every error raised by wcperiod services."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class ResonanceError(WCPeriodError):
    """The nonresonance condition c != e^{omega*lambda} fails within the margin."""

    def __init__(
        self,
        message: str,
        eigenvalue: Optional[complex] = None,
        mode: Optional[int] = None,
        distance: Optional[float] = None,
    ):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.mode = mode
        self.distance = distance


class NonConvergenceError(WCPeriodError):
    """A fixed-point iteration exhausted its budget.

    The last iterate is attached so callers can still report it.
    """

    def __init__(
        self,
        message: str,
        last_update: float,
        iterations: int,
        trajectory: Any = None,
    ):
        super().__init__(message)
        self.last_update = last_update
        self.iterations = iterations
        self.trajectory = trajectory


class DomainError(WCPeriodError):
    """An argument lies outside the domain of the operation."""


class OverflowComputationError(WCPeriodError):
    """A result left the floating-point range."""


class ConvergenceFailureError(WCPeriodError):
    """The eigenvalue iteration did not converge."""


class SingularityError(WCPeriodError):
    """A linear solve broke down."""


class MissingConstantError(WCPeriodError):
    """A certificate needs a constant the nonlinearity does not declare."""


class DegenerateInputError(WCPeriodError):
    """A closed-form bound is undefined for the given input."""


class ExtensionError(WCPeriodError):
    """A trajectory is not closed enough to be extended beyond its window."""


class IntegrationError(WCPeriodError):
    """The initial value integrator failed (step-size underflow)."""


class AliasingError(WCPeriodError):
    """A spatial grid is too coarse for the requested modes."""


class ExpressionError(WCPeriodError):
    """Parse or evaluation failure in the nonlinearity expression language."""

    def __init__(self, message: str, position: Optional[int] = None):
        super().__init__(message if position is None else f"{message} (at column {position + 1})")
        self.position = position


class ScenarioError(WCPeriodError):
    """Scenario document could not be parsed or validated."""

    def __init__(self, errors: List[str]):
        super().__init__("; ".join(errors))
        self.errors = errors
