"""
(omega, c)-periodic solutions of y' = Ay + g(t, y) for bounded A.

Two independent routes:

- ``picard_solve`` iterates y <- S(y), (Sy)(t) = int_0^omega K(t, s) g(s, y(s)) ds,
  on a collocation grid;
- ``poincare_solve`` iterates y0 <- (cI - e^{A omega})^{-1} int_0^omega e^{A(omega-s)} g(s, y(s)) ds
  where y(s) is integrated from y0 by an adaptive Runge-Kutta pair.

Both return a ``SolutionTrajectory`` on the same kind of grid, so the second
serves as an oracle for the first.
"""

import logging
import math
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import solve_ivp

from models.trajectory_models import ResidualReport, SolutionTrajectory
from services.config import GRID_SIZE, PICARD_MAX_ITER, PICARD_TOL, QUAD_NODES
from services.errors import DomainError, ExtensionError, IntegrationError, NonConvergenceError
from services.kernels import GreenGridOperator, GreenKernelODE
from services.linalg import ComplexMatrix, complex_matrix, matrix_exponentials, vector_norm
from services.nonlinearity import NonlinearitySpec
from services.quadrature import composite_rule

logger = logging.getLogger(__name__)

MIN_GRID_SIZE = 9
EXTENSION_TOL = 1e-6
DAMPING = 0.5
_POINCARE_PANELS = 64
_PERIODICITY_SAMPLES = 64


def _check_budget(max_iter: int) -> None:
    if max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {max_iter}")


def _sup_difference(a: np.ndarray, b: np.ndarray, norm) -> float:
    return float(np.max(np.atleast_1d(vector_norm(a - b, norm))))


class _DampedIteration:
    """
    Bookkeeping shared by both fixed-point loops.

    A step whose update grows relative to the previous one is taken with
    factor 0.5; the fixed point is unchanged.
    """

    def __init__(self):
        self.history: List[float] = []
        self.damping_engaged = False

    def step(self, current: np.ndarray, proposal: np.ndarray, update: float) -> np.ndarray:
        grew = bool(self.history) and update > self.history[-1]
        self.history.append(update)
        if grew:
            if not self.damping_engaged:
                logger.warning("Update grew to %.3e; damping with factor %.1f", update, DAMPING)
            self.damping_engaged = True
            return current + DAMPING * (proposal - current)
        return proposal


def picard_solve(
    kernel: GreenKernelODE,
    g: NonlinearitySpec,
    grid_size: int = GRID_SIZE,
    tol: float = PICARD_TOL,
    max_iter: int = PICARD_MAX_ITER,
    initial: Optional[SolutionTrajectory] = None,
    nodes: int = QUAD_NODES,
) -> SolutionTrajectory:
    """
    Picard iteration on the integral equation y = S(y).

    Args:
        kernel: Green kernel of the linear part (nonresonance already enforced).
        g: Nonlinearity, evaluated at the Gauss points of every grid panel
            through the piecewise-cubic interpolant of the current iterate.
        grid_size: Number of grid nodes, t_0 = 0 ... t_N = omega.
        tol: Stop when the sup-norm of the Picard correction is at most tol.
        max_iter: Iteration budget.
        initial: Starting iterate; y = 0 when omitted.
        nodes: Gauss nodes per panel.

    Returns:
        The converged trajectory with its residual report.

    Raises:
        NonConvergenceError: budget exhausted; the last iterate is attached.
    """
    if grid_size < MIN_GRID_SIZE:
        raise DomainError(f"grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}")
    _check_budget(max_iter)
    spec = kernel.spec
    grid = np.linspace(0.0, spec.omega, grid_size)
    operator = GreenGridOperator(kernel, grid, nodes)
    points = operator.points.ravel()

    if initial is not None:
        values = np.asarray(initial.interpolate(grid), dtype=np.complex128)
    else:
        values = np.zeros((grid_size, kernel.dim), dtype=np.complex128)

    def trajectory(current: np.ndarray, iterations: int, update: float, history: List[float]) -> SolutionTrajectory:
        return SolutionTrajectory(
            spec=spec,
            grid=grid,
            values=current,
            iterations=iterations,
            final_update=update,
            method="picard",
            update_history=list(history),
        )

    loop = _DampedIteration()
    update = math.inf
    for iteration in range(1, max_iter + 1):
        at_points = trajectory(values, iteration, update, []).interpolate(points)
        forcing = g(points, at_points).reshape(operator.points.shape + (kernel.dim,))
        proposal = operator.apply(forcing)
        update = _sup_difference(proposal, values, spec.norm)
        logger.debug("Picard iteration %s: update %.3e", iteration, update)
        if update <= tol:
            loop.history.append(update)
            result = trajectory(proposal, iteration, update, loop.history)
            result.residuals = residual_report(result, kernel.A, g)
            logger.info("Picard converged in %s iterations (update %.3e)", iteration, update)
            return result
        values = loop.step(values, proposal, update)

    last = trajectory(values, max_iter, update, loop.history)
    last.residuals = residual_report(last, kernel.A, g)
    logger.warning("Picard did not converge after %s iterations (update %.3e)", max_iter, update)
    raise NonConvergenceError(
        f"Picard iteration did not converge in {max_iter} iterations (last update {update:.3e})",
        last_update=update,
        iterations=max_iter,
        trajectory=last,
    )


def _windowed(traj, t: float, evaluate: Callable[[float], np.ndarray]) -> np.ndarray:
    omega = traj.spec.omega
    k = math.floor(t / omega)
    tau = min(max(t - k * omega, 0.0), omega)
    return traj.spec.c**k * evaluate(tau)


def check_extendable(traj, tol: float = EXTENSION_TOL) -> None:
    boundary = traj.residuals.boundary if traj.residuals is not None else math.inf
    if not boundary <= tol:
        raise ExtensionError(f"boundary residual {boundary:.3e} exceeds {tol:.1e}; extension is not well-defined")


def extend_solution(traj: SolutionTrajectory, t: float) -> np.ndarray:
    """y(t) = c^k y(t - k omega) with k = floor(t / omega), for any real t."""
    check_extendable(traj)
    return _windowed(traj, t, traj.interpolate)


def _finite_difference_derivative(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Fourth-order central differences at nodes 2 .. N-2 of a uniform grid."""
    h = grid[1] - grid[0]
    return (-values[4:] + 8.0 * values[3:-1] - 8.0 * values[1:-3] + values[:-4]) / (12.0 * h)


def periodicity_defect(traj, evaluate: Callable[[float], np.ndarray]) -> float:
    """max ||y(t + omega) - c y(t)|| in the trajectory norm over samples of [0, omega] on the extension."""
    omega = traj.spec.omega
    worst = 0.0
    for t in np.linspace(0.0, omega, _PERIODICITY_SAMPLES, endpoint=False):
        ahead = _windowed(traj, t + omega, evaluate)
        here = _windowed(traj, t, evaluate)
        worst = max(worst, float(vector_norm(ahead - traj.spec.c * here, traj.spec.norm)))
    return worst


def residual_report(traj: SolutionTrajectory, A: ComplexMatrix, g: NonlinearitySpec) -> ResidualReport:
    """Boundary, differential-equation and periodicity residuals of a trajectory."""
    A = complex_matrix(A)
    norm = traj.spec.norm
    values = traj.values
    boundary = float(vector_norm(values[-1] - traj.spec.c * values[0], norm))

    ode = 0.0
    if traj.grid.size >= 5:
        derivative = _finite_difference_derivative(traj.grid, values)
        interior_t = traj.grid[2:-2]
        interior_y = values[2:-2]
        defect = derivative - interior_y @ A.T - g(interior_t, interior_y)
        ode = float(np.max(vector_norm(defect, norm)))

    periodicity = periodicity_defect(traj, traj.interpolate)
    return ResidualReport(boundary=boundary, ode=ode, periodicity=periodicity)


def _propagate(A: ComplexMatrix, g: NonlinearitySpec, y0: np.ndarray, omega: float, tol: float):
    def rhs(t, y):
        return A @ y + g(t, y)

    solution = solve_ivp(
        rhs,
        (0.0, omega),
        np.asarray(y0, dtype=np.complex128),
        method="RK45",
        rtol=tol / 10.0,
        atol=tol / 10.0,
        dense_output=True,
    )
    if solution.status == -1:
        raise IntegrationError(f"initial value integration failed: {solution.message}")
    return solution.sol


def poincare_solve(
    kernel: GreenKernelODE,
    g: NonlinearitySpec,
    tol: float = PICARD_TOL,
    max_iter: int = PICARD_MAX_ITER,
    grid_size: int = GRID_SIZE,
    initial: Optional[np.ndarray] = None,
) -> SolutionTrajectory:
    """
    Fixed point of the Poincare map by shooting.

    Args:
        kernel: Supplies A, the resolvent R = (cI - e^{A omega})^{-1} and the spec.
        g: Nonlinearity; called with a scalar t and a vector y by the integrator.
        tol: Stop when ||P(y0) - y0|| <= tol; the integrator runs at tol / 10.
        max_iter: Iteration budget.
        grid_size: Nodes of the returned trajectory.
        initial: Starting y0; zero when omitted.

    Returns:
        The trajectory integrated from the converged y0.

    Raises:
        NonConvergenceError: budget exhausted.
        IntegrationError: step-size underflow in the integrator.
    """
    if grid_size < MIN_GRID_SIZE:
        raise DomainError(f"grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}")
    _check_budget(max_iter)
    spec = kernel.spec
    A = kernel.A
    omega = spec.omega
    points, weights = composite_rule(0.0, omega, _POINCARE_PANELS, QUAD_NODES)
    weighted_flow = weights[:, None, None] * matrix_exponentials(A, omega - points)
    grid = np.linspace(0.0, omega, grid_size)

    def poincare_map(y0: np.ndarray):
        dense = _propagate(A, g, y0, omega, tol)
        states = dense(points).T
        convolution = np.einsum("mab,mb->a", weighted_flow, g(points, states))
        return kernel.resolvent @ convolution, dense

    y0 = np.zeros(kernel.dim, dtype=np.complex128) if initial is None else np.asarray(initial, dtype=np.complex128)
    loop = _DampedIteration()
    update = math.inf
    dense = None
    for iteration in range(1, max_iter + 1):
        proposal, dense = poincare_map(y0)
        update = float(vector_norm(proposal - y0, spec.norm))
        logger.debug("Poincare iteration %s: update %.3e", iteration, update)
        if update <= tol:
            loop.history.append(update)
            dense = _propagate(A, g, proposal, omega, tol)
            result = SolutionTrajectory(
                spec=spec,
                grid=grid,
                values=dense(grid).T.astype(np.complex128),
                iterations=iteration,
                final_update=update,
                method="poincare",
                update_history=list(loop.history),
            )
            result.residuals = residual_report(result, A, g)
            logger.info("Poincare map converged in %s iterations (update %.3e)", iteration, update)
            return result
        y0 = loop.step(y0, proposal, update)

    last = SolutionTrajectory(
        spec=spec,
        grid=grid,
        values=dense(grid).T.astype(np.complex128),
        iterations=max_iter,
        final_update=update,
        method="poincare",
        update_history=list(loop.history),
    )
    logger.warning("Poincare map did not converge after %s iterations (update %.3e)", max_iter, update)
    raise NonConvergenceError(
        f"Poincare iteration did not converge in {max_iter} iterations (last update {update:.3e})",
        last_update=update,
        iterations=max_iter,
        trajectory=last,
    )


def oracle_gap(first: SolutionTrajectory, second: SolutionTrajectory) -> float:
    """Sup-norm distance of two trajectories on the grid of the first."""
    other = second.values if np.array_equal(first.grid, second.grid) else second.interpolate(first.grid)
    return _sup_difference(first.values, other, first.spec.norm)
