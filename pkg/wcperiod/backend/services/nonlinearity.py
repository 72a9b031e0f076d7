"""
Nonlinearities g(t, y) and the sampling checks of their declared constants.

Two flavours exist:

- ``NonlinearitySpec`` for the bounded-operator (ODE) path, evaluated on
  vectors of C^n;
- ``FieldNonlinearity`` for the diagonal-generator path, split into a
  state-independent forcing (known exactly in modal coordinates) and a
  pointwise reaction term evaluated on the spatial grid.

Declared constants are never computed here, only spot-checked.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from services.config import SAMPLE_SEED
from services.linalg import NormKind, vector_norm

logger = logging.getLogger(__name__)

_LIPSCHITZ_SLACK = 1e-6
_GROWTH_SLACK = 1e-9
_SAMPLE_RADIUS = 5.0


@dataclass(frozen=True)
class NonlinearitySpec:
    """
    g(t, y) on C^dim with optional declared constants.

    ``evaluate`` must broadcast: t of shape (m,) with y of shape (m, dim)
    returns (m, dim); a scalar t with y of shape (dim,) returns (dim,).
    """

    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dim: int
    name: str = "custom"
    L: Optional[float] = None
    g1: Optional[float] = None
    g2: Optional[float] = None
    c1_declared: bool = False
    real_domain: bool = False
    parameters: Dict[str, float] = field(default_factory=dict)

    def __call__(self, t, y) -> np.ndarray:
        return np.asarray(self.evaluate(t, y), dtype=np.complex128)

    def norm_at_zero(self, t: np.ndarray, norm: NormKind) -> np.ndarray:
        """||g(t, 0)|| for an array of times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        zeros = np.zeros((t.size, self.dim), dtype=np.complex128)
        return np.atleast_1d(vector_norm(self(t, zeros), norm))


@dataclass(frozen=True)
class FieldNonlinearity:
    """
    g(t, u) = forcing(t, x) + reaction(t, u(x)) on a function space.

    ``forcing_modes(t, modes)`` gives the exact modal coefficients of the
    forcing for integer mode labels; ``forcing_norm(t)`` its exact norm. The
    reaction must vanish at u = 0, so ||g(t, 0)|| = forcing_norm(t).
    """

    forcing: Callable[[float, np.ndarray], np.ndarray]
    reaction: Callable[[float, np.ndarray], np.ndarray]
    forcing_norm: Callable[[np.ndarray], np.ndarray]
    forcing_modes: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    name: str = "custom"
    L: Optional[float] = None
    g1: Optional[float] = None
    g2: Optional[float] = None
    c1_declared: bool = False
    parameters: Dict[str, float] = field(default_factory=dict)

    def norm_at_zero(self, t: np.ndarray, norm: Optional[NormKind] = None) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.forcing_norm(np.atleast_1d(t)), dtype=float))

    def evaluate_field(self, t: float, u: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Physical-space values of g(t, u) on the grid x."""
        return np.asarray(self.forcing(t, x), dtype=np.complex128) + np.asarray(
            self.reaction(t, u), dtype=np.complex128
        )


def sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float, real: bool) -> np.ndarray:
    """Points uniformly distributed in the ball of the given radius."""
    if real:
        directions = rng.standard_normal((count, dim))
    else:
        directions = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / (dim * (1 if real else 2)))
    return (directions * radii[:, None]).astype(np.complex128)


@dataclass(frozen=True)
class SpotCheck:
    sampled_lipschitz: float
    sampled_growth_excess: float
    lipschitz_ok: bool
    growth_ok: bool


def spot_check_constants(
    g: NonlinearitySpec,
    omega: float,
    norm: NormKind,
    samples: int = 512,
    seed: int = SAMPLE_SEED,
) -> SpotCheck:
    """
    Sample difference quotients and growth against the declared constants.

    Returns the largest sampled quotient ||g(t,y1)-g(t,y2)|| / ||y1-y2|| and the
    largest excess ||g(t,y)|| - g1 - g2||y||. A violation is logged, not raised:
    the constants are the user's analytic claim.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, omega, samples)
    y1 = sample_ball(rng, samples, g.dim, _SAMPLE_RADIUS, g.real_domain)
    # nearby pairs sample the local derivative, distant ones the global slope
    scale = np.where(np.arange(samples) % 2 == 0, 1e-3, 1.0)[:, None]
    y2 = y1 + scale * sample_ball(rng, samples, g.dim, 1.0, g.real_domain)

    diff = np.atleast_1d(vector_norm(g(t, y1) - g(t, y2), norm))
    gap = np.atleast_1d(vector_norm(y1 - y2, norm))
    quotients = np.divide(diff, gap, out=np.zeros_like(diff), where=gap > 0)
    sampled_lipschitz = float(np.max(quotients))

    growth_excess = -np.inf
    if g.g1 is not None and g.g2 is not None:
        values = np.atleast_1d(vector_norm(g(t, y1), norm))
        growth_excess = float(np.max(values - g.g1 - g.g2 * np.atleast_1d(vector_norm(y1, norm))))

    lipschitz_ok = g.L is None or sampled_lipschitz <= g.L * (1.0 + _LIPSCHITZ_SLACK)
    growth_ok = growth_excess <= _GROWTH_SLACK
    if not lipschitz_ok:
        logger.warning(
            "Declared L=%s of %s contradicted by sampling (quotient %.6g)", g.L, g.name, sampled_lipschitz
        )
    if not growth_ok:
        logger.warning("Declared (g1, g2) of %s contradicted by sampling (excess %.3g)", g.name, growth_excess)
    return SpotCheck(sampled_lipschitz, growth_excess, lipschitz_ok, growth_ok)
