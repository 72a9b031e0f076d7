"""
Pydantic models for scenario documents (JSON).
"""

from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, validator

from models.certificate_models import BoundSource
from services import config
from services.catalog import FIELD_BUILTINS, ODE_BUILTINS
from services.errors import ExpressionError
from services.expressions import parse_expression
from services.linalg import NormKind


class SolverMethod(str, Enum):
    PICARD = "picard"
    POINCARE = "poincare"
    BOTH = "both"


class GeneratorName(str, Enum):
    HEAT_DIRICHLET = "heat_dirichlet"
    SCHRODINGER_PERIODIC = "schrodinger_periodic"


class OdeProblem(BaseModel):
    """y' = Ay + g(t, y) on C^n."""

    kind: Literal["ode"] = "ode"
    matrix: List[List[Tuple[float, float]]] = Field(
        ...,
        description="Rows of A, each entry a [re, im] pair",
        example=[[[2, 0], [-4, 0]], [[6, 0], [-8, 0]]],
    )

    @validator("matrix")
    def validate_square(cls, value):
        size = len(value)
        if size == 0 or any(len(row) != size for row in value):
            raise ValueError(f"matrix must be square, got {size} rows of lengths {[len(row) for row in value]}")
        return value

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def entries(self) -> List[List[complex]]:
        return [[complex(re, im) for re, im in row] for row in self.matrix]

    class Config:
        frozen = True


class SpectralProblem(BaseModel):
    """Diagonal generator truncated to K modes, nonlinearity on an N-point grid."""

    kind: Literal["spectral"] = "spectral"
    generator: GeneratorName = Field(..., description="heat_dirichlet or schrodinger_periodic")
    K: int = Field(default=64, description="Truncation level")
    points: Optional[int] = Field(default=None, description="Spatial grid size N (default 4K)")

    @validator("K")
    def validate_K(cls, value: int) -> int:
        if value < 1:
            raise ValueError("K must be >= 1")
        return value

    class Config:
        frozen = True


class NonlinearityConfig(BaseModel):
    """Either a catalog entry or one expression per state component."""

    builtin: Optional[str] = Field(default=None, description="Catalog name, e.g. example_3_1")
    components: Optional[List[str]] = Field(default=None, description="Expressions in t, y1..yn and parameters")
    parameters: Dict[str, float] = Field(default_factory=dict, description="Named parameters, e.g. a")

    @validator("components", always=True)
    def validate_components(cls, value, values):
        if value is None:
            if values.get("builtin") is None:
                raise ValueError("either builtin or components is required")
            return value
        if values.get("builtin") is not None:
            raise ValueError("builtin and components are mutually exclusive")
        for text in value:
            try:
                parse_expression(text)
            except ExpressionError as exc:
                raise ValueError(f"{text!r}: {exc}") from exc
        return value

    @validator("builtin")
    def validate_builtin(cls, value):
        if value is not None and value not in ODE_BUILTINS and value not in FIELD_BUILTINS:
            known = sorted(set(ODE_BUILTINS) | set(FIELD_BUILTINS))
            raise ValueError(f"unknown builtin {value!r}; known: {known}")
        return value

    class Config:
        frozen = True


class DeclaredConstants(BaseModel):
    L: Optional[float] = Field(default=None, ge=0.0, description="Lipschitz constant")
    g1: Optional[float] = Field(default=None, ge=0.0, description="Growth constant term")
    g2: Optional[float] = Field(default=None, ge=0.0, description="Growth linear term")

    class Config:
        frozen = True


class SolverSettings(BaseModel):
    grid: int = Field(default=config.GRID_SIZE, description="Time grid nodes on [0, omega]")
    tol: float = Field(default=config.PICARD_TOL, gt=0.0, description="Fixed-point tolerance")
    max_iter: int = Field(default=config.PICARD_MAX_ITER, ge=1, description="Iteration budget")
    method: SolverMethod = Field(default=SolverMethod.PICARD, description="picard, poincare or both")
    bound: BoundSource = Field(default=BoundSource.MC, description="Which M the ODE certificates use")

    @validator("grid")
    def validate_grid(cls, value: int) -> int:
        if value < 9:
            raise ValueError("grid must have at least 9 nodes")
        return value

    class Config:
        frozen = True


class OutputPaths(BaseModel):
    certificate: str = Field(default="certificate.json", description="Certificate report")
    trajectory_csv: str = Field(default="trajectory.csv", description="Trajectory samples")
    report: str = Field(default="report.json", description="Residual and oracle report")

    class Config:
        frozen = True


class Scenario(BaseModel):
    """A complete problem description for the CLI and the HTTP API."""

    name: str = Field(default="scenario", description="Label used in reports")
    problem: Union[OdeProblem, SpectralProblem] = Field(..., discriminator="kind")
    omega: float = Field(..., description="Period length")
    c: Tuple[float, float] = Field(..., description="Multiplier as [re, im]")
    norm: NormKind = Field(default=NormKind.L2, description="l1, l2 or linf")
    nonlinearity: NonlinearityConfig
    constants: Optional[DeclaredConstants] = Field(default=None, description="Overrides catalog constants")
    solver: SolverSettings = Field(default_factory=SolverSettings)
    outputs: OutputPaths = Field(default_factory=OutputPaths)

    @validator("omega")
    def validate_omega(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("omega must be positive")
        return value

    @validator("c")
    def validate_c(cls, value):
        if value[0] == 0 and value[1] == 0:
            raise ValueError("c must be nonzero")
        return value

    @validator("nonlinearity")
    def validate_arity(cls, value: NonlinearityConfig, values):
        problem = values.get("problem")
        if problem is None:
            return value
        if isinstance(problem, OdeProblem):
            if value.builtin is not None and value.builtin not in ODE_BUILTINS:
                raise ValueError(f"{value.builtin!r} is not an ODE nonlinearity")
            if value.builtin is not None and problem.dim != 2:
                raise ValueError(f"{value.builtin!r} acts on C^2, matrix is {problem.dim}x{problem.dim}")
            if value.components is not None:
                if len(value.components) != problem.dim:
                    raise ValueError(f"{len(value.components)} components for a {problem.dim}-dimensional problem")
                for text in value.components:
                    too_high = [k for k in parse_expression(text).state_indices() if k > problem.dim]
                    if too_high:
                        raise ValueError(f"{text!r} refers to y{max(too_high)} beyond dimension {problem.dim}")
        else:
            if value.builtin not in FIELD_BUILTINS:
                raise ValueError("spectral problems take a catalog nonlinearity (heat_cubic or schrodinger_cubic)")
        return value

    @property
    def multiplier(self) -> complex:
        return complex(self.c[0], self.c[1])

    class Config:
        frozen = True
