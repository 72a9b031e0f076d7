"""
Pydantic models for theorem certificates.
"""

import math
from enum import Enum
from typing import Dict, Optional, Union

from pydantic import BaseModel, Field


class Theorem(str, Enum):
    """Which result a certificate evaluates."""

    T31 = "T31"  # uniqueness, bounded A:       L M < 1
    T41 = "T41"  # existence, bounded A:        g2 M < 1
    T51 = "T51"  # uniqueness, mild solutions:  L U < 1
    T52 = "T52"  # existence, mild solutions:   Poincare-map self-mapping


class Verdict(str, Enum):
    CERTIFIED = "certified"
    FAILED = "failed"


class BoundSource(str, Enum):
    """How the constant M of a bounded-operator certificate was obtained."""

    EXACT_M = "exactM"
    MB = "Mb"
    MC = "Mc"


class Certificate(BaseModel):
    """Evaluated hypotheses, constants and verdict of one theorem."""

    theorem: Theorem = Field(..., description="Theorem evaluated")
    constants: Dict[str, float] = Field(
        default_factory=dict,
        description="Named constants (L, M, U, Q, gamma, g1, g2, contraction, bound, Xi, ...)",
    )
    verdict: Verdict = Field(..., description="certified or failed")
    reason: Optional[str] = Field(None, description="Why the certificate failed")
    bound_source: Optional[BoundSource] = Field(
        None,
        description="Which M was used (bounded-operator theorems only)",
    )
    hypotheses: Dict[str, Union[bool, float, str]] = Field(
        default_factory=dict,
        description="Recorded side hypotheses and sampled checks",
    )
    inputs_digest: str = Field(..., description="Description of the problem instance")

    class Config:
        frozen = True

    @property
    def certified(self) -> bool:
        return self.verdict == Verdict.CERTIFIED

    @property
    def contraction(self) -> float:
        return self.constants["contraction"]

    @property
    def bound(self) -> Optional[float]:
        return self.constants.get("bound")

    def gronwall_bound(self, y0_norm: float, t: float) -> float:
        """
        Trajectory estimate Q (||y0|| + g1 omega e^{|gamma| omega}) e^{(Q g2 + gamma) t}
        of the Poincare-map construction; only meaningful on [0, omega].
        """
        if self.theorem != Theorem.T52:
            raise ValueError("the Gronwall trajectory bound belongs to T52 certificates")
        q = self.constants["Q"]
        gamma = self.constants["gamma"]
        g1 = self.constants["g1"]
        g2 = self.constants["g2"]
        omega = self.constants["omega"]
        return q * (y0_norm + g1 * omega * math.exp(abs(gamma) * omega)) * math.exp((q * g2 + gamma) * t)
