"""
Built-in nonlinearities with their analytically derived constants.

ODE path (X = C^2, A = [[2, -4], [6, -8]], omega = pi, c = -1):
    example_3_1   a (sin t cos(y1+y2), cos 2t sin(y1-y2))
    example_4_3   (a sin t (|y1+y2|+1), a cos t |y1-y2|)

Field path:
    heat_cubic(a, eta)      a sin t - eta u^3/(u^2+1)         on L^2(0, pi), Dirichlet
    schrodinger_cubic(a)    i(a(1+sin^2 x)e^{it/4} - |u|^2 u/(5(|u|^2+1)))  on L^2(0, 2pi)
"""

import logging
import math
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from services.errors import DomainError
from services.linalg import NormKind
from services.nonlinearity import FieldNonlinearity, NonlinearitySpec

logger = logging.getLogger(__name__)

EXAMPLE_MATRIX = ((2.0, -4.0), (6.0, -8.0))
EXAMPLE_OMEGA = math.pi
EXAMPLE_C = -1.0

# (L, g1) per unit |a| for example_3_1; g2 = 0
_EXAMPLE_3_1_CONSTANTS: Dict[NormKind, Tuple[float, float]] = {
    NormKind.L1: (2.0, 2.0),
    NormKind.LINF: (2.0, 1.0),
    NormKind.L2: (math.sqrt(2.0), math.sqrt(2.0)),
}

# (g1, g2) per unit |a| for example_4_3; L = g2
_EXAMPLE_4_3_CONSTANTS: Dict[NormKind, Tuple[float, float]] = {
    NormKind.L1: (1.0, math.sqrt(2.0)),
    NormKind.LINF: (1.0, 2.0),
    NormKind.L2: (math.sqrt(2.0), 2.0),
}


def example_3_1(a: float, norm: NormKind) -> NonlinearitySpec:
    """a (sin t cos(y1 + y2), cos 2t sin(y1 - y2))."""
    norm = NormKind(norm)
    lipschitz, growth = _EXAMPLE_3_1_CONSTANTS[norm]

    def evaluate(t, y):
        y = np.asarray(y)
        t = np.asarray(t)
        first = a * np.sin(t) * np.cos(y[..., 0] + y[..., 1])
        second = a * np.cos(2 * t) * np.sin(y[..., 0] - y[..., 1])
        return np.stack([first, second], axis=-1)

    return NonlinearitySpec(
        evaluate=evaluate,
        dim=2,
        name="example_3_1",
        L=lipschitz * abs(a),
        g1=growth * abs(a),
        g2=0.0,
        c1_declared=True,
        real_domain=True,
        parameters={"a": a},
    )


def example_4_3(a: float, norm: NormKind) -> NonlinearitySpec:
    """(a sin t (|y1 + y2| + 1), a cos t |y1 - y2|)."""
    norm = NormKind(norm)
    growth_const, growth_lin = _EXAMPLE_4_3_CONSTANTS[norm]

    def evaluate(t, y):
        y = np.asarray(y)
        t = np.asarray(t)
        first = a * np.sin(t) * (np.abs(y[..., 0] + y[..., 1]) + 1.0)
        second = a * np.cos(t) * np.abs(y[..., 0] - y[..., 1])
        return np.stack([first, second], axis=-1)

    return NonlinearitySpec(
        evaluate=evaluate,
        dim=2,
        name="example_4_3",
        L=growth_lin * abs(a),
        g1=growth_const * abs(a),
        g2=growth_lin * abs(a),
        c1_declared=True,
        real_domain=True,
        parameters={"a": a},
    )


def heat_cubic(a: float, eta: float = 0.5) -> FieldNonlinearity:
    """
    a sin t - eta u^3/(u^2 + 1) on L^2(0, pi) in the Dirichlet sine basis.

    eta = 1/2 is the forced heat problem with Lipschitz constant 9/16.
    """
    if eta < 0:
        raise DomainError(f"eta must be nonnegative, got {eta}")

    def forcing(t, x):
        return a * np.sin(t) * np.ones_like(np.asarray(x, dtype=float))

    def reaction(t, u):
        u = np.asarray(u)
        return -eta * u**3 / (u**2 + 1.0)

    def forcing_norm(t):
        return abs(a) * np.abs(np.sin(t)) * math.sqrt(math.pi)

    def forcing_modes(t, modes):
        # <1, sqrt(2/pi) sin kx> = sqrt(2/pi) (1 - (-1)^k)/k
        k = np.asarray(modes, dtype=float)
        odd = np.asarray(modes) % 2 == 1
        coefficients = np.where(odd, 2.0 * math.sqrt(2.0 / math.pi) / k, 0.0)
        return a * math.sin(t) * coefficients.astype(np.complex128)

    return FieldNonlinearity(
        forcing=forcing,
        reaction=reaction,
        forcing_norm=forcing_norm,
        forcing_modes=forcing_modes,
        name="heat_cubic",
        L=9.0 * eta / 8.0,
        g1=abs(a) * math.sqrt(math.pi),
        g2=eta,
        c1_declared=True,
        parameters={"a": a, "eta": eta},
    )


def schrodinger_cubic(a: complex) -> FieldNonlinearity:
    """
    i (a (1 + sin^2 x) e^{it/4} - |u|^2 u / (5(|u|^2 + 1))) on L^2(0, 2 pi).

    Written as y_t = i y_xx + g(t, y), i.e. the generator is i d^2/dx^2.
    """

    def forcing(t, x):
        x = np.asarray(x, dtype=float)
        return 1j * a * (1.0 + np.sin(x) ** 2) * np.exp(0.25j * t)

    def reaction(t, u):
        u = np.asarray(u, dtype=np.complex128)
        modulus = np.abs(u) ** 2
        return -1j * modulus * u / (5.0 * (modulus + 1.0))

    def forcing_norm(t):
        return abs(a) * math.sqrt(19.0 * math.pi) / 2.0 * np.ones_like(np.asarray(t, dtype=float))

    def forcing_modes(t, modes):
        # 1 + sin^2 x = 3/2 - (e^{2ix} + e^{-2ix})/4 against e^{ikx}/sqrt(2 pi)
        k = np.asarray(modes)
        root = math.sqrt(2.0 * math.pi)
        coefficients = np.where(k == 0, 1.5 * root, np.where(np.abs(k) == 2, -0.25 * root, 0.0))
        return 1j * a * np.exp(0.25j * t) * coefficients.astype(np.complex128)

    return FieldNonlinearity(
        forcing=forcing,
        reaction=reaction,
        forcing_norm=forcing_norm,
        forcing_modes=forcing_modes,
        name="schrodinger_cubic",
        L=9.0 / 40.0,
        g1=abs(a) * math.sqrt(19.0 * math.pi) / 2.0,
        g2=0.2,
        c1_declared=True,
        parameters={"a": a},
    )


def heat_reaction_slope(u: np.ndarray) -> np.ndarray:
    """|d/du [u^3 / (2(u^2 + 1))]| = (u^4 + 3u^2) / (2(u^2 + 1)^2)."""
    u = np.asarray(u, dtype=float)
    return (u**4 + 3.0 * u**2) / (2.0 * (u**2 + 1.0) ** 2)


def schrodinger_reaction_slope(r: np.ndarray) -> np.ndarray:
    """Operator-norm bound of DH at |y| = r: (r^4 + 3r^2) / (5(r^2 + 1)^2)."""
    r = np.asarray(r, dtype=float)
    return (r**4 + 3.0 * r**2) / (5.0 * (r**2 + 1.0) ** 2)


def maximize_slope(
    slope: Callable[[np.ndarray], np.ndarray],
    upper: float = 50.0,
    samples: int = 200_001,
) -> float:
    """Dense-grid maximum of a nonnegative slope on [0, upper], refined locally."""
    grid = np.linspace(0.0, upper, samples)
    values = slope(grid)
    idx = int(np.argmax(values))
    lo = grid[max(idx - 1, 0)]
    hi = grid[min(idx + 1, samples - 1)]
    best = float(values[idx])
    result = minimize_scalar(lambda u: -float(slope(np.array(u))), bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-12})
    if result.success:
        best = max(best, float(-result.fun))
    logger.debug("Slope maximum %.12g near u=%.6g", best, grid[idx])
    return best


ODE_BUILTINS = {
    "example_3_1": example_3_1,
    "example_4_3": example_4_3,
}

FIELD_BUILTINS = {
    "heat_cubic": heat_cubic,
    "schrodinger_cubic": schrodinger_cubic,
}
