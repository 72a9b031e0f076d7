"""
Solution trajectories on [0, omega] and their residual reports.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.interpolate import CubicSpline

from models.domain_models import PeriodicitySpec
from services.linalg import vector_norm


class ResidualReport(BaseModel):
    """A-posteriori checks of a computed (omega, c)-periodic solution."""

    boundary: float = Field(..., description="||y(omega) - c y(0)||")
    ode: float = Field(..., description="Max interior residual of the differential (or mild) equation")
    periodicity: float = Field(..., description="Max ||y(t + omega) - c y(t)|| on the extension")

    class Config:
        frozen = True


def _complex_spline(grid: np.ndarray, values: np.ndarray) -> CubicSpline:
    # real and imaginary parts side by side, split again on evaluation
    return CubicSpline(grid, np.concatenate([values.real, values.imag], axis=1), axis=0)


@dataclass
class SolutionTrajectory:
    """y(t_i) on a grid 0 = t_0 < ... < t_N = omega, values of shape (N + 1, dim)."""

    spec: PeriodicitySpec
    grid: np.ndarray
    values: np.ndarray
    iterations: int
    final_update: float
    method: str = "picard"
    residuals: Optional[ResidualReport] = None
    update_history: List[float] = field(default_factory=list)
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def interpolate(self, t) -> np.ndarray:
        """Piecewise-cubic value at t in [0, omega]; accepts scalars and arrays."""
        if self._spline is None:
            self._spline = _complex_spline(self.grid, self.values)
        raw = self._spline(t)
        return raw[..., : self.dim] + 1j * raw[..., self.dim :]

    def sup_norm(self) -> float:
        return float(np.max(vector_norm(self.values, self.spec.norm)))


@dataclass
class FieldTrajectory:
    """
    Modal coefficients y_k(t_i) of a mild solution, shape (N + 1, modes).

    ``modes`` holds the integer labels of the basis functions.
    """

    spec: PeriodicitySpec
    grid: np.ndarray
    coefficients: np.ndarray
    modes: np.ndarray
    iterations: int
    final_update: float
    residuals: Optional[ResidualReport] = None
    update_history: List[float] = field(default_factory=list)
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False, compare=False)

    def interpolate(self, t) -> np.ndarray:
        if self._spline is None:
            self._spline = _complex_spline(self.grid, self.coefficients)
        raw = self._spline(t)
        count = self.modes.size
        return raw[..., :count] + 1j * raw[..., count:]

    def norms(self) -> np.ndarray:
        """||y(t_i)|| for every grid time (Parseval)."""
        return np.linalg.norm(self.coefficients, axis=1)

    def sup_norm(self) -> float:
        return float(np.max(self.norms()))
