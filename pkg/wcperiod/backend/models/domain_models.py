"""
Pydantic models for the problem data shared by every solver.
"""

from pydantic import BaseModel, Field, validator

from services import config
from services.linalg import NormKind


class PeriodicitySpec(BaseModel):
    """The pair (omega, c) of g(t + omega) = c g(t), plus the norm on X."""

    omega: float = Field(..., description="Period length, > 0")
    c: complex = Field(..., description="Nonzero multiplier")
    norm: NormKind = Field(default=NormKind.L2, description="Norm on the state space")

    @validator("omega")
    def validate_omega(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("omega must be positive")
        return value

    @validator("c")
    def validate_c(cls, value: complex) -> complex:
        if abs(value) == 0:
            raise ValueError("c must be nonzero")
        return value

    class Config:
        frozen = True


class QuadratureSpec(BaseModel):
    """Discretization of M = max_t int_0^omega ||K(t, s)|| ds."""

    panels: int = Field(
        default=config.QUAD_PANELS,
        description="Gauss panels per branch of the s-integral",
    )
    nodes_per_panel: int = Field(
        default=config.QUAD_NODES,
        description="Gauss-Legendre nodes per panel",
    )
    t_samples: int = Field(
        default=config.T_SAMPLES,
        description="Grid resolution for the outer max over t",
    )

    @validator("panels")
    def validate_panels(cls, value: int) -> int:
        if value < 1:
            raise ValueError("panels must be >= 1")
        return value

    @validator("nodes_per_panel")
    def validate_nodes(cls, value: int) -> int:
        if value < 2:
            raise ValueError("nodes_per_panel must be >= 2")
        return value

    @validator("t_samples")
    def validate_t_samples(cls, value: int) -> int:
        if value < 2:
            raise ValueError("t_samples must be >= 2")
        return value

    class Config:
        frozen = True
