"""
Pydantic models for the HTTP API.
"""

from datetime import datetime
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from models.certificate_models import Certificate
from models.trajectory_models import ResidualReport


class CertifyResponse(BaseModel):
    """Certificates of a scenario and the exit-code-equivalent outcome."""

    scenario: str = Field(..., description="Scenario name")
    exit_code: int = Field(..., description="Same code the CLI would return")
    outcome: str = Field(..., description="ok, resonance, certificate_failed or nonconvergence")
    primary_theorem: Optional[str] = Field(None, description="Theorem deciding the outcome")
    certificates: List[Certificate] = Field(default_factory=list)
    messages: List[str] = Field(default_factory=list)


class SolveResponse(CertifyResponse):
    """Certificates plus the solver results."""

    converged: Optional[bool] = Field(None, description="Whether the fixed-point iteration converged")
    iterations: Optional[int] = Field(None, description="Iterations used")
    final_update: Optional[float] = Field(None, description="Sup-norm of the last correction")
    residuals: Optional[ResidualReport] = None
    sup_norm: Optional[float] = Field(None, description="max_t ||y(t)||")
    oracle_gap: Optional[float] = Field(None, description="Distance to the independent solver")
    bound_respected: Optional[bool] = Field(None, description="||y||_0 within the a-priori bound")
    trajectory: List[Dict[str, float]] = Field(
        default_factory=list,
        description="Rows t, re_y1, im_y1, ...",
    )


class CertificateRecord(BaseModel):
    """An archived certificate."""

    id: int
    scenario: str
    theorem: str
    verdict: str
    reason: Optional[str] = None
    contraction: Optional[float] = None
    bound: Optional[float] = None
    constants: Dict[str, float] = Field(default_factory=dict)
    inputs_digest: str
    created_at: datetime

    class Config:
        from_attributes = True


class ReproduceRow(BaseModel):
    quantity: str
    published: float
    computed: float
    tolerance: float
    relative: bool
    difference: float
    ok: bool


class ReproduceResponse(BaseModel):
    example_id: str = Field(..., description="Worked example id, e.g. 3.1")
    all_ok: bool = Field(..., description="Every row within tolerance")
    rows: List[ReproduceRow] = Field(default_factory=list)
