"""
Certificates for the existence/uniqueness theorems.

    T31  bounded A, (C1)+(C2):  L M < 1,   ||y||_0 <= M ||g(.,0)||_0 / (1 - L M)
    T41  bounded A, (C1)+(C3):  g2 M < 1,  ||y||_0 <= M g1 / (1 - M g2)
    T51  semigroup, (C1)+(C2):  L U < 1,   ||y||_0 <= U ||g(.,0)||_0 / (1 - L U)
    T52  semigroup, (C1)+(C3):  Q||R|| e^{gamma w}(e^{Q g2 w} - 1) < 1, ||y0|| <= Xi

Certificates are pure functions of their inputs.
"""

import hashlib
import logging
import math
from typing import Callable, Dict, NamedTuple, Optional, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from models.certificate_models import BoundSource, Certificate, Theorem, Verdict
from models.domain_models import PeriodicitySpec, QuadratureSpec
from services.config import C1_SAMPLES, SAMPLE_SEED, VERDICT_SLACK
from services.errors import DomainError, MissingConstantError
from services.kernels import GreenKernelODE, bound_M_exponential, bound_M_integral, compute_M
from services.linalg import NormKind, vector_norm
from services.nonlinearity import FieldNonlinearity, NonlinearitySpec, sample_ball, spot_check_constants

logger = logging.getLogger(__name__)

_C1_RADIUS = 5.0
_GAMMA_ZERO = 1e-12

AnyNonlinearity = Union[NonlinearitySpec, FieldNonlinearity]


class GeneratorConstants(NamedTuple):
    """Growth bound ||S(t)|| <= Q e^{gamma t} and ||(cI - S(omega))^{-1}||."""

    Q: float
    gamma: float
    resolvent_norm: float


def verify_c1(g: NonlinearitySpec, spec: PeriodicitySpec, samples: int = C1_SAMPLES) -> float:
    """max ||g(t + omega, c y) - c g(t, y)|| over a fixed-seed cloud, t in [0, 2 omega], ||y|| <= 5."""
    rng = np.random.default_rng(SAMPLE_SEED)
    t = rng.uniform(0.0, 2.0 * spec.omega, samples)
    y = sample_ball(rng, samples, g.dim, _C1_RADIUS, g.real_domain)
    residual = g(t + spec.omega, spec.c * y) - spec.c * g(t, y)
    return float(np.max(np.atleast_1d(vector_norm(residual, spec.norm))))


def verify_field_c1(
    g: FieldNonlinearity,
    spec: PeriodicitySpec,
    x: np.ndarray,
    samples: int = 64,
    real: bool = True,
) -> float:
    """Grid version of verify_c1: max over sampled (t, u) of the pointwise residual."""
    rng = np.random.default_rng(SAMPLE_SEED)
    worst = 0.0
    for t in rng.uniform(0.0, 2.0 * spec.omega, samples):
        u = sample_ball(rng, x.size, 1, _C1_RADIUS, real)[:, 0]
        residual = g.evaluate_field(t + spec.omega, spec.c * u, x) - spec.c * g.evaluate_field(t, u, x)
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def sup_norm_at_zero(g: AnyNonlinearity, omega: float, norm: NormKind, samples: int) -> float:
    """||g(., 0)||_0 = max_{t in [0, omega]} ||g(t, 0)||, sampled then refined locally."""
    grid = np.linspace(0.0, omega, samples)
    values = g.norm_at_zero(grid, norm)
    idx = int(np.argmax(values))
    best = float(values[idx])
    lo, hi = grid[max(idx - 1, 0)], grid[min(idx + 1, samples - 1)]
    result = minimize_scalar(
        lambda t: -float(g.norm_at_zero(np.array([t]), norm)[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if result.success:
        best = max(best, float(-result.fun))
    return best


def describe_instance(**parts) -> str:
    """Human-readable instance description followed by a short content hash."""
    text = "; ".join(f"{key}={value}" for key, value in parts.items())
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
    return f"{text}; sha256={digest}"


def _verdict(contraction: float, inequality: str):
    if contraction < 1.0 - VERDICT_SLACK:
        return Verdict.CERTIFIED, None
    if abs(contraction - 1.0) <= VERDICT_SLACK:
        return Verdict.FAILED, "boundary case"
    return Verdict.FAILED, f"{inequality} = {contraction:.6g} >= 1"


def _require(value: Optional[float], name: str, g: AnyNonlinearity) -> float:
    if value is None:
        raise MissingConstantError(f"nonlinearity {g.name!r} does not declare {name}")
    return float(value)


def _select_M(kernel: GreenKernelODE, quad: QuadratureSpec, use_bound: BoundSource) -> float:
    use_bound = BoundSource(use_bound)
    if use_bound == BoundSource.EXACT_M:
        return compute_M(kernel, quad)
    if use_bound == BoundSource.MB:
        return bound_M_exponential(kernel)
    return bound_M_integral(kernel, quad)


def _kernel_digest(kernel: GreenKernelODE, g: AnyNonlinearity) -> str:
    return describe_instance(
        A=np.round(kernel.A, 15).tolist(),
        omega=kernel.omega,
        c=kernel.c,
        norm=kernel.spec.norm.value,
        g=g.name,
        parameters=g.parameters,
    )


def _spot_hypotheses(kernel: GreenKernelODE, g: NonlinearitySpec) -> Dict[str, Union[bool, float, str]]:
    check = spot_check_constants(g, kernel.omega, kernel.spec.norm)
    return {
        "A1": True,
        "C1_declared": g.c1_declared,
        "C1_residual": verify_c1(g, kernel.spec),
        "sampled_lipschitz": check.sampled_lipschitz,
        "lipschitz_consistent": check.lipschitz_ok,
        "growth_consistent": check.growth_ok,
    }


def certify_theorem1(
    kernel: GreenKernelODE,
    g: NonlinearitySpec,
    quad: Optional[QuadratureSpec] = None,
    use_bound: BoundSource = BoundSource.EXACT_M,
) -> Certificate:
    """Uniqueness for bounded A: L M < 1 with the a-priori bound of the fixed point."""
    quad = quad or QuadratureSpec()
    lipschitz = _require(g.L, "L", g)
    M = _select_M(kernel, quad, use_bound)
    contraction = lipschitz * M
    verdict, reason = _verdict(contraction, "L*M")

    constants = {"L": lipschitz, "M": M, "contraction": contraction}
    zero_norm = sup_norm_at_zero(g, kernel.omega, kernel.spec.norm, quad.t_samples)
    constants["g_zero_norm"] = zero_norm
    if verdict == Verdict.CERTIFIED:
        constants["bound"] = M * zero_norm / (1.0 - contraction)

    certificate = Certificate(
        theorem=Theorem.T31,
        constants=constants,
        verdict=verdict,
        reason=reason,
        bound_source=BoundSource(use_bound),
        hypotheses=_spot_hypotheses(kernel, g),
        inputs_digest=_kernel_digest(kernel, g),
    )
    logger.info("T31 %s: L*M=%.6g (M from %s)", verdict.value, contraction, BoundSource(use_bound).value)
    return certificate


def certify_theorem2(
    kernel: GreenKernelODE,
    g: NonlinearitySpec,
    quad: Optional[QuadratureSpec] = None,
    use_bound: BoundSource = BoundSource.EXACT_M,
) -> Certificate:
    """Existence for bounded A (dim X < infinity): g2 M < 1, ||y||_0 <= M g1 / (1 - M g2)."""
    quad = quad or QuadratureSpec()
    g1 = _require(g.g1, "g1", g)
    g2 = _require(g.g2, "g2", g)
    M = _select_M(kernel, quad, use_bound)
    contraction = g2 * M
    verdict, reason = _verdict(contraction, "g2*M")

    constants = {"g1": g1, "g2": g2, "M": M, "contraction": contraction}
    if verdict == Verdict.CERTIFIED:
        constants["bound"] = M * g1 / (1.0 - contraction)

    hypotheses = _spot_hypotheses(kernel, g)
    hypotheses["finite_dimension"] = True

    certificate = Certificate(
        theorem=Theorem.T41,
        constants=constants,
        verdict=verdict,
        reason=reason,
        bound_source=BoundSource(use_bound),
        hypotheses=hypotheses,
        inputs_digest=_kernel_digest(kernel, g),
    )
    logger.info("T41 %s: g2*M=%.6g", verdict.value, contraction)
    return certificate


def compute_U(constants: GeneratorConstants, spec: PeriodicitySpec) -> float:
    """
    U = Q (e^{gamma omega} - 1)/gamma ||R|| max{|c|, 1}, and Q omega ||R|| max{|c|, 1}
    when |gamma| < 1e-12.
    """
    q, gamma, resolvent_norm = constants
    factor = q * resolvent_norm * max(abs(spec.c), 1.0)
    if abs(gamma) < _GAMMA_ZERO:
        return factor * spec.omega
    return factor * math.expm1(gamma * spec.omega) / gamma


def _check_generator_constants(constants: GeneratorConstants) -> None:
    if constants.Q < 1.0:
        raise DomainError(f"growth constant Q must be >= 1, got {constants.Q}")
    if not constants.resolvent_norm > 0.0:
        raise DomainError("resolvent norm must be positive")


def _generator_digest(constants: GeneratorConstants, spec: PeriodicitySpec, g: AnyNonlinearity) -> str:
    return describe_instance(
        Q=constants.Q,
        gamma=constants.gamma,
        resolvent_norm=constants.resolvent_norm,
        omega=spec.omega,
        c=spec.c,
        g=g.name,
        parameters=g.parameters,
    )


def certify_theorem3(
    gen_constants: GeneratorConstants,
    spec: PeriodicitySpec,
    g: AnyNonlinearity,
    t_samples: int = 257,
) -> Certificate:
    """Uniqueness of the mild solution: L U < 1 with bound U ||g(.,0)||_0 / (1 - L U)."""
    gen_constants = GeneratorConstants(*gen_constants)
    _check_generator_constants(gen_constants)
    lipschitz = _require(g.L, "L", g)
    U = compute_U(gen_constants, spec)
    contraction = lipschitz * U
    verdict, reason = _verdict(contraction, "L*U")

    zero_norm = sup_norm_at_zero(g, spec.omega, spec.norm, t_samples)
    constants = {
        "L": lipschitz,
        "U": U,
        "Q": gen_constants.Q,
        "gamma": gen_constants.gamma,
        "resolvent_norm": gen_constants.resolvent_norm,
        "g_zero_norm": zero_norm,
        "contraction": contraction,
    }
    if verdict == Verdict.CERTIFIED:
        constants["bound"] = U * zero_norm / (1.0 - contraction)

    certificate = Certificate(
        theorem=Theorem.T51,
        constants=constants,
        verdict=verdict,
        reason=reason,
        hypotheses={"A2": True, "A3": True, "C1_declared": g.c1_declared},
        inputs_digest=_generator_digest(gen_constants, spec, g),
    )
    logger.info("T51 %s: L*U=%.6g", verdict.value, contraction)
    return certificate


def certify_theorem4(
    gen_constants: GeneratorConstants,
    spec: PeriodicitySpec,
    g: AnyNonlinearity,
    compact_semigroup: Optional[bool] = None,
) -> Certificate:
    """
    Existence of a mild solution via the Poincare map: the left side
    Q ||R|| e^{gamma omega} (e^{Q g2 omega} - 1) must stay below 1; the map then
    sends the ball of radius Xi into itself.
    """
    gen_constants = GeneratorConstants(*gen_constants)
    _check_generator_constants(gen_constants)
    g1 = _require(g.g1, "g1", g)
    g2 = _require(g.g2, "g2", g)
    q, gamma, resolvent_norm = gen_constants
    omega = spec.omega

    growth = math.expm1(q * g2 * omega)
    contraction = q * resolvent_norm * math.exp(gamma * omega) * growth
    verdict, reason = _verdict(contraction, "Q*|R|*e^(gamma*omega)*(e^(Q*g2*omega)-1)")

    constants = {
        "Q": q,
        "gamma": gamma,
        "resolvent_norm": resolvent_norm,
        "g1": g1,
        "g2": g2,
        "omega": omega,
        "contraction": contraction,
    }
    if verdict == Verdict.CERTIFIED:
        spread = math.exp(abs(gamma) * omega)
        numerator = q * resolvent_norm * (
            g1 * spread * omega + math.exp(gamma * omega) * q * g1 * omega * spread * growth
        )
        xi = numerator / (1.0 - contraction)
        constants["Xi"] = xi
        constants["bound"] = xi

    hypotheses: Dict[str, Union[bool, float, str]] = {"A2": True, "A3": True, "C1_declared": g.c1_declared}
    if compact_semigroup is not None:
        hypotheses["A5_decay_witness"] = compact_semigroup

    certificate = Certificate(
        theorem=Theorem.T52,
        constants=constants,
        verdict=verdict,
        reason=reason,
        hypotheses=hypotheses,
        inputs_digest=_generator_digest(gen_constants, spec, g),
    )
    logger.info("T52 %s: lhs=%.6g", verdict.value, contraction)
    return certificate


def locate_threshold(contraction_of: Callable[[float], float], lo: float, hi: float) -> float:
    """
    Parameter value where a contraction quantity crosses 1.

    ``contraction_of`` must be continuous and monotone on [lo, hi] with the
    crossing inside the bracket.
    """
    f_lo = contraction_of(lo) - 1.0
    f_hi = contraction_of(hi) - 1.0
    if f_lo * f_hi > 0:
        raise DomainError(f"no threshold crossing in [{lo}, {hi}]")
    return float(brentq(lambda p: contraction_of(p) - 1.0, lo, hi, xtol=1e-14, rtol=1e-14))
