"""
Green kernels of the linear boundary value problem y' = Ay + f, y(omega) = c y(0).

    K(t, s) = c e^{A(t-s)} R          for s in [0, t]
              e^{A(omega+t-s)} R      for s in (t, omega]

with R = (cI - e^{A omega})^{-1}. The kernel jumps by the identity at s = t,
so every s-integral is split there.
"""

import logging
import math
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from models.domain_models import PeriodicitySpec, QuadratureSpec
from services.config import MARGIN_TOL
from services.errors import DegenerateInputError, DomainError
from services.linalg import (
    ComplexMatrix,
    complex_matrix,
    induced_norm,
    matrix_exponential,
    matrix_exponentials,
    nonresonance_resolvent,
)
from services.quadrature import composite_rule, gauss_legendre_rule, integrate

logger = logging.getLogger(__name__)


class GreenKernelODE:
    """
    Kernel K(t, s) for a bounded operator A and a periodicity spec.

    Construction enforces the nonresonance condition and caches e^{A omega}
    and R; instances are never mutated afterwards.
    """

    def __init__(
        self,
        A: Sequence[Sequence[complex]],
        spec: PeriodicitySpec,
        margin_tol: float = MARGIN_TOL,
    ):
        self.A = complex_matrix(A)
        self.spec = spec
        self.dim = self.A.shape[0]
        self.monodromy = matrix_exponential(self.A, spec.omega)
        self.resolvent = nonresonance_resolvent(self.A, spec.omega, spec.c, margin_tol)
        self.monodromy.setflags(write=False)
        self.resolvent.setflags(write=False)
        logger.info(
            "Green kernel ready: dim=%s omega=%s c=%s norm=%s",
            self.dim,
            spec.omega,
            spec.c,
            spec.norm.value,
        )

    @property
    def omega(self) -> float:
        return self.spec.omega

    @property
    def c(self) -> complex:
        return self.spec.c

    def _check_time(self, value: float, name: str) -> None:
        if not 0.0 <= value <= self.omega:
            raise DomainError(f"{name}={value} outside [0, {self.omega}]")

    def lower_branch(self, t: float, s: float) -> ComplexMatrix:
        """c e^{A(t-s)} R, the branch used for s <= t."""
        return self.c * matrix_exponential(self.A, t - s) @ self.resolvent

    def upper_branch(self, t: float, s: float) -> ComplexMatrix:
        """e^{A(omega+t-s)} R, the branch used for s > t (and its limit at s = t)."""
        return matrix_exponential(self.A, self.omega + t - s) @ self.resolvent

    def resolvent_flow_norms(self, u: np.ndarray) -> np.ndarray:
        """||e^{Au} R|| for every u in a 1-D array, in the spec's norm."""
        return induced_norm(matrix_exponentials(self.A, u) @ self.resolvent, self.spec.norm)


def kernel_K(kernel: GreenKernelODE, t: float, s: float) -> ComplexMatrix:
    """Evaluate K(t, s); at s == t the first branch is returned."""
    kernel._check_time(t, "t")
    kernel._check_time(s, "s")
    if s <= t:
        return kernel.lower_branch(t, s)
    return kernel.upper_branch(t, s)


class KernelIntegralMax(NamedTuple):
    value: float
    argmax: float


def kernel_row_integral(kernel: GreenKernelODE, t: float, quad: Optional[QuadratureSpec] = None) -> float:
    """int_0^omega ||K(t, s)|| ds, split at s = t."""
    quad = quad or QuadratureSpec()
    kernel._check_time(t, "t")
    omega = kernel.omega

    def lower(s: np.ndarray) -> np.ndarray:
        return abs(kernel.c) * kernel.resolvent_flow_norms(t - s)

    def upper(s: np.ndarray) -> np.ndarray:
        return kernel.resolvent_flow_norms(omega + t - s)

    return integrate(lower, 0.0, t, quad.panels, quad.nodes_per_panel) + integrate(
        upper, t, omega, quad.panels, quad.nodes_per_panel
    )


def maximize_kernel_integral(kernel: GreenKernelODE, quad: Optional[QuadratureSpec] = None) -> KernelIntegralMax:
    """
    M = max_t int ||K(t, s)|| ds together with its argmax.

    Both branches depend on s only through the flow norm h(u) = ||e^{Au} R||
    (u = t - s on the lower branch, u = omega + t - s on the upper one), so
    the row integral at t is |c| F(t) + F(omega) - F(t) with F(t) = int_0^t h.
    F is tabulated on the t-sample grid once; the discrete argmax is refined
    with a bounded scalar search on its neighbouring samples.
    """
    quad = quad or QuadratureSpec()
    omega = kernel.omega
    abs_c = abs(kernel.c)
    samples = np.linspace(0.0, omega, quad.t_samples)

    # panels per t-cell so that the whole [0, omega] gets about `panels` per branch
    cell_panels = max(1, math.ceil(quad.panels / (quad.t_samples - 1)))
    increments = [
        integrate(kernel.resolvent_flow_norms, lo, hi, cell_panels, quad.nodes_per_panel)
        for lo, hi in zip(samples[:-1], samples[1:])
    ]
    F = np.concatenate([[0.0], np.cumsum(increments)])
    total = F[-1]
    rows = abs_c * F + (total - F)
    idx = int(np.argmax(rows))

    def row_at(t: float) -> float:
        # nearest tabulated sample at or below t, then the short remainder
        k = min(int(np.searchsorted(samples, t, side="right")) - 1, quad.t_samples - 1)
        k = max(k, 0)
        partial = F[k] + integrate(kernel.resolvent_flow_norms, samples[k], t, 1, quad.nodes_per_panel)
        return abs_c * partial + (total - partial)

    lo = samples[max(idx - 1, 0)]
    hi = samples[min(idx + 1, quad.t_samples - 1)]
    best_t, best_value = float(samples[idx]), float(rows[idx])
    if hi > lo:
        result = minimize_scalar(lambda t: -row_at(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if result.success and -result.fun > best_value:
            best_t, best_value = float(result.x), float(-result.fun)

    logger.debug("M=%.12g attained at t=%.6g", best_value, best_t)
    return KernelIntegralMax(value=best_value, argmax=best_t)


def compute_M(kernel: GreenKernelODE, quad: Optional[QuadratureSpec] = None) -> float:
    """M = max_{t in [0, omega]} int_0^omega ||K(t, s)|| ds."""
    return maximize_kernel_integral(kernel, quad).value


def bound_M_exponential(kernel: GreenKernelODE) -> float:
    """
    Closed-form upper bound

        (e^{||A|| omega} - 1)/||A|| * max{|c| ||R||, ||R e^{A omega}||}

    from ||e^{Au}|| <= e^{||A|| |u|} on both branches. Up to the factor 1/||A||, the row bound
    |c| ||R|| (e^{||A|| t} - 1) + ||R e^{A omega}|| (e^{||A|| (omega - t)} - 1)
    is convex in t, so its maximum sits at t = 0 or t = omega.
    """
    norm = kernel.spec.norm
    a_norm = induced_norm(kernel.A, norm)
    if a_norm == 0.0:
        raise DegenerateInputError("||A|| = 0: exponential bound undefined, use the integral bound")
    growth = math.exp(a_norm * kernel.omega)
    first = abs(kernel.c) * induced_norm(kernel.resolvent, norm)
    second = induced_norm(kernel.resolvent @ kernel.monodromy, norm)
    return (growth - 1.0) / a_norm * max(first, second)


def bound_M_integral(kernel: GreenKernelODE, quad: Optional[QuadratureSpec] = None) -> float:
    """max{|c|, 1} int_0^omega ||e^{As} R|| ds."""
    quad = quad or QuadratureSpec()
    flow = integrate(kernel.resolvent_flow_norms, 0.0, kernel.omega, quad.panels, quad.nodes_per_panel)
    return max(abs(kernel.c), 1.0) * flow


def apply_kernel(
    kernel: GreenKernelODE,
    f: Callable[[np.ndarray], np.ndarray],
    times: Sequence[float],
    quad: Optional[QuadratureSpec] = None,
) -> np.ndarray:
    """
    y(t_i) = int_0^omega K(t_i, s) f(s) ds for a vectorized forcing f.

    ``f`` maps an array of m times to an (m, dim) array. Each branch gets its
    own composite Gauss rule. Returns shape (len(times), dim).
    """
    quad = quad or QuadratureSpec()
    omega = kernel.omega
    out = np.zeros((len(times), kernel.dim), dtype=np.complex128)
    for i, t in enumerate(times):
        kernel._check_time(t, "t")
        s_lo, w_lo = composite_rule(0.0, t, quad.panels, quad.nodes_per_panel)
        s_hi, w_hi = composite_rule(t, omega, quad.panels, quad.nodes_per_panel)
        lower = kernel.c * matrix_exponentials(kernel.A, t - s_lo) @ kernel.resolvent
        upper = matrix_exponentials(kernel.A, omega + t - s_hi) @ kernel.resolvent
        f_lo = np.asarray(f(s_lo), dtype=np.complex128).reshape(s_lo.size, kernel.dim)
        f_hi = np.asarray(f(s_hi), dtype=np.complex128).reshape(s_hi.size, kernel.dim)
        out[i] = np.einsum("m,mab,mb->a", w_lo, lower, f_lo) + np.einsum("m,mab,mb->a", w_hi, upper, f_hi)
    return out


class GreenGridOperator:
    """
    The integral operator f -> int_0^omega K(., s) f(s) ds on a fixed time grid.

    Grid nodes are panel boundaries, so the split at s = t_i is exact. Each
    panel carries a Gauss rule; the forcing is supplied at the Gauss points.
    The two kernel branches are accumulated through the running convolution
    I(t_i) = int_0^{t_i} e^{A(t_i - s)} f(s) ds:

        lower(t_i) = c R I(t_i)
        upper(t_i) = e^{A t_i} R I(omega) - R e^{A omega} I(t_i)
    """

    def __init__(self, kernel: GreenKernelODE, grid: np.ndarray, nodes: int):
        self.kernel = kernel
        self.grid = np.asarray(grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid must be strictly increasing with at least two nodes")
        if self.grid[0] != 0.0 or not math.isclose(self.grid[-1], kernel.omega, rel_tol=1e-14):
            raise DomainError(f"grid must span [0, {kernel.omega}]")

        A = kernel.A
        x, w = gauss_legendre_rule(nodes)
        widths = np.diff(self.grid)
        self.nodes = nodes
        self.points = self.grid[:-1, None] + 0.5 * widths[:, None] * (1.0 + x[None, :])
        self.weights = 0.5 * widths[:, None] * w[None, :]

        offsets = (self.grid[1:, None] - self.points).ravel()
        self.panel_propagators = matrix_exponentials(A, offsets).reshape(widths.size, nodes, kernel.dim, kernel.dim)
        self.steps = matrix_exponentials(A, widths)
        self.flow_resolvent = matrix_exponentials(A, self.grid) @ kernel.resolvent
        self.wrap = kernel.resolvent @ kernel.monodromy

    def convolution(self, forcing: np.ndarray) -> np.ndarray:
        """Running I(t_i) for forcing values of shape (panels, nodes, dim)."""
        panel_integrals = np.einsum("jm,jmab,jmb->ja", self.weights, self.panel_propagators, forcing)
        running = np.zeros((self.grid.size, self.kernel.dim), dtype=np.complex128)
        for j, contribution in enumerate(panel_integrals):
            running[j + 1] = self.steps[j] @ running[j] + contribution
        return running

    def apply(self, forcing: np.ndarray) -> np.ndarray:
        """Kernel applied to forcing given at the Gauss points; shape (grid, dim)."""
        running = self.convolution(forcing)
        lower = self.kernel.c * running @ self.kernel.resolvent.T
        upper = np.einsum("iab,b->ia", self.flow_resolvent, running[-1]) - running @ self.wrap.T
        return lower + upper
