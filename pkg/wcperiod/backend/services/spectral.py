"""
Mild solutions for generators that are diagonal in an orthonormal basis.

S(t) multiplies mode k by e^{lambda_k t}. Two bases are built in:

- ``dirichlet_sine``: e_k(x) = sqrt(2/pi) sin kx on (0, pi), k = 1..K
- ``periodic_exponential``: e_k(x) = e^{ikx} / sqrt(2 pi) on (0, 2 pi), k = -K..K

Coefficients are in the units of the L^2 norm (Parseval). The nonlinearity is
applied pointwise on a physical grid of N points and projected back; time
integration per mode uses exponential-weighted product integration of a
local cubic interpolant, which is exact for the stiff factor e^{lambda_k t}.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as spfft
from scipy.linalg import expm

from models.domain_models import PeriodicitySpec
from models.trajectory_models import FieldTrajectory, ResidualReport
from services.certificates import GeneratorConstants
from services.config import GRID_SIZE, MARGIN_TOL, PICARD_MAX_ITER, PICARD_TOL
from services.errors import AliasingError, DomainError, NonConvergenceError, ResonanceError
from services.nonlinearity import FieldNonlinearity
from services.ode_solver import (
    MIN_GRID_SIZE,
    _check_budget,
    _DampedIteration,
    _windowed,
    check_extendable,
    periodicity_defect,
)

logger = logging.getLogger(__name__)

_TAIL_SCAN = 64
_MAX_DENOMINATOR = 720
_RATIONAL_TOL = 1e-12
_GROWTH_SLACK = 1e-12

# stencil offsets (in steps, relative to the panel start) for the first, interior and last panels
_STENCILS = np.array([[0, 1, 2, 3], [-1, 0, 1, 2], [-2, -1, 0, 1]])


class BasisKind(str, Enum):
    DIRICHLET_SINE = "dirichlet_sine"
    PERIODIC_EXPONENTIAL = "periodic_exponential"


class TailKind(str, Enum):
    """How e^{lambda_k omega} behaves for modes beyond the truncation."""

    NONE = "none"  # finite spectrum
    DECAYING = "decaying"  # e^{lambda_k omega} -> 0
    UNIMODULAR = "unimodular"  # lambda_k = -i k^2


@dataclass(frozen=True, eq=False)
class DiagonalGenerator:
    """Truncated diagonal generator with growth constants ||S(t)|| <= Q e^{gamma t}."""

    modes: np.ndarray
    eigenvalues: np.ndarray
    Q: float
    gamma: float
    basis: Optional[BasisKind] = None
    tail: TailKind = TailKind.NONE
    eigenvalue_of: Optional[Callable[[np.ndarray], np.ndarray]] = None
    reversible: bool = False
    name: str = "diagonal"

    @property
    def K(self) -> int:
        return int(np.max(np.abs(self.modes)))

    @property
    def size(self) -> int:
        return int(self.modes.size)

    @classmethod
    def heat_dirichlet(cls, K: int) -> "DiagonalGenerator":
        """d^2/dx^2 on (0, pi) with Dirichlet conditions: lambda_k = -k^2."""
        if K < 1:
            raise DomainError(f"K must be >= 1, got {K}")
        modes = np.arange(1, K + 1)

        def eigenvalue_of(k):
            return -np.asarray(k, dtype=float) ** 2 + 0j

        return cls(
            modes=modes,
            eigenvalues=eigenvalue_of(modes),
            Q=1.0,
            gamma=-1.0,
            basis=BasisKind.DIRICHLET_SINE,
            tail=TailKind.DECAYING,
            eigenvalue_of=eigenvalue_of,
            name="heat_dirichlet",
        )

    @classmethod
    def schrodinger_periodic(cls, K: int) -> "DiagonalGenerator":
        """i d^2/dx^2 on (0, 2 pi) with periodic conditions: lambda_k = -i k^2."""
        if K < 1:
            raise DomainError(f"K must be >= 1, got {K}")
        modes = np.arange(-K, K + 1)

        def eigenvalue_of(k):
            return -1j * np.asarray(k, dtype=float) ** 2

        return cls(
            modes=modes,
            eigenvalues=eigenvalue_of(modes),
            Q=1.0,
            gamma=0.0,
            basis=BasisKind.PERIODIC_EXPONENTIAL,
            tail=TailKind.UNIMODULAR,
            eigenvalue_of=eigenvalue_of,
            reversible=True,
            name="schrodinger_periodic",
        )

    @classmethod
    def from_eigenvalues(cls, eigenvalues: Sequence[complex], name: str = "diagonal") -> "DiagonalGenerator":
        """Finite spectrum; Q = 1 and gamma = max Re lambda."""
        values = np.asarray(eigenvalues, dtype=np.complex128).ravel()
        if values.size == 0:
            raise DomainError("at least one eigenvalue is required")
        return cls(
            modes=np.arange(1, values.size + 1),
            eigenvalues=values,
            Q=1.0,
            gamma=float(np.max(values.real)),
            reversible=True,
            name=name,
        )


@dataclass
class FieldState:
    """Coefficients of a state in the generator's orthonormal basis."""

    coefficients: np.ndarray
    modes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


def semigroup_apply(gen: DiagonalGenerator, t: float, state: FieldState) -> FieldState:
    """S(t) y0: multiply mode k by e^{lambda_k t}."""
    if t < 0 and not gen.reversible:
        raise DomainError(f"{gen.name} generates a semigroup only for t >= 0, got t={t}")
    coefficients = np.exp(gen.eigenvalues * t) * np.asarray(state.coefficients, dtype=np.complex128)
    return FieldState(coefficients=coefficients, modes=gen.modes)


def growth_bound_holds(gen: DiagonalGenerator, times: np.ndarray) -> bool:
    """sup_k |e^{lambda_k t}| <= Q e^{gamma t} at every sampled t >= 0."""
    times = np.asarray(times, dtype=float)
    worst = np.max(np.abs(np.exp(np.outer(times, gen.eigenvalues))), axis=1)
    return bool(np.all(worst <= gen.Q * np.exp(gen.gamma * times) * (1.0 + _GROWTH_SLACK)))


def _rational_multiple_of_pi(omega: float) -> Optional[Fraction]:
    ratio = omega / math.pi
    candidate = Fraction(ratio).limit_denominator(_MAX_DENOMINATOR)
    if abs(ratio - candidate.numerator / candidate.denominator) < _RATIONAL_TOL:
        return candidate
    return None


def _tail_distances(gen: DiagonalGenerator, spec: PeriodicitySpec) -> List[Tuple[float, Optional[int]]]:
    c = spec.c
    if gen.tail == TailKind.NONE:
        return []
    if gen.tail == TailKind.DECAYING:
        modes = np.arange(gen.K + 1, gen.K + 1 + _TAIL_SCAN)
        distances = np.abs(c - np.exp(gen.eigenvalue_of(modes) * spec.omega))
        # e^{lambda_k omega} -> 0, so |c| is the limit of the distances
        return [(float(d), int(k)) for d, k in zip(distances, modes)] + [(abs(c), None)]

    multiple = _rational_multiple_of_pi(spec.omega)
    if multiple is None:
        # e^{-i k^2 omega} is dense on the unit circle
        return [(abs(abs(c) - 1.0), None)]
    # e^{-i pi k^2 p/q} repeats with period 2q in k
    modes = np.arange(gen.K + 1, gen.K + 1 + 2 * multiple.denominator)
    distances = np.abs(c - np.exp(gen.eigenvalue_of(modes) * spec.omega))
    return [(float(d), int(k)) for d, k in zip(distances, modes)]


def resolvent_norm(gen: DiagonalGenerator, spec: PeriodicitySpec, margin_tol: float = MARGIN_TOL) -> float:
    """
    ||(cI - S(omega))^{-1}|| = sup_k 1 / |c - e^{lambda_k omega}|.

    The supremum runs over the truncation and over the analytic tail of the
    eigenvalue formula, where it may be attained.

    Raises:
        ResonanceError: some mode (or the tail) comes within ``margin_tol`` of c.
    """
    c = spec.c
    distances = np.abs(c - np.exp(gen.eigenvalues * spec.omega))
    candidates = [(float(d), int(k)) for d, k in zip(distances, gen.modes)]
    candidates.extend(_tail_distances(gen, spec))
    distance, mode = min(candidates, key=lambda item: item[0])
    if distance < margin_tol:
        where = "the spectral tail" if mode is None else f"mode {mode}"
        raise ResonanceError(
            f"c={c} resonates with {where}: |c - e^(lambda omega)| = {distance:.3e}",
            mode=mode,
            distance=distance,
        )
    logger.debug("Resolvent norm %.12g attained at mode %s", 1.0 / distance, mode)
    return 1.0 / distance


def generator_constants(gen: DiagonalGenerator, spec: PeriodicitySpec) -> GeneratorConstants:
    return GeneratorConstants(Q=gen.Q, gamma=gen.gamma, resolvent_norm=resolvent_norm(gen, spec))


def default_points(gen: DiagonalGenerator) -> int:
    return 4 * gen.K


def _check_points(gen: DiagonalGenerator, points: int) -> None:
    if gen.basis is None:
        raise DomainError(f"{gen.name} has no spatial basis")
    if points < 2 * gen.K + 2:
        raise AliasingError(f"{points} grid points cannot resolve {gen.K} modes (need at least {2 * gen.K + 2})")


def grid_points(gen: DiagonalGenerator, points: int) -> np.ndarray:
    """Uniform interior grid of the basis domain."""
    _check_points(gen, points)
    if gen.basis == BasisKind.DIRICHLET_SINE:
        return np.arange(1, points + 1) * math.pi / (points + 1)
    return np.arange(points) * 2.0 * math.pi / points


def _dst(values: np.ndarray) -> np.ndarray:
    real = spfft.dst(values.real, type=1, norm="ortho", axis=-1)
    imag = spfft.dst(values.imag, type=1, norm="ortho", axis=-1)
    return real + 1j * imag


def _to_grid(gen: DiagonalGenerator, coefficients: np.ndarray, points: int) -> np.ndarray:
    coefficients = np.asarray(coefficients, dtype=np.complex128)
    padded = np.zeros(coefficients.shape[:-1] + (points,), dtype=np.complex128)
    if gen.basis == BasisKind.DIRICHLET_SINE:
        padded[..., gen.modes - 1] = coefficients
        return math.sqrt((points + 1) / math.pi) * _dst(padded)
    padded[..., gen.modes % points] = coefficients
    return points / math.sqrt(2.0 * math.pi) * spfft.ifft(padded, axis=-1)


def _from_grid(gen: DiagonalGenerator, samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.complex128)
    points = samples.shape[-1]
    if gen.basis == BasisKind.DIRICHLET_SINE:
        return math.sqrt(math.pi / (points + 1)) * _dst(samples)[..., gen.modes - 1]
    return math.sqrt(2.0 * math.pi) / points * spfft.fft(samples, axis=-1)[..., gen.modes % points]


def grid_transform(gen: DiagonalGenerator, state: FieldState, points: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Grid x_j and samples sum_k y_k e_k(x_j)."""
    points = points or default_points(gen)
    x = grid_points(gen, points)
    return x, _to_grid(gen, state.coefficients, points)


def inverse_grid_transform(gen: DiagonalGenerator, samples: np.ndarray) -> FieldState:
    """Orthonormal projection of grid samples onto the truncated basis."""
    samples = np.asarray(samples)
    _check_points(gen, samples.shape[-1])
    return FieldState(coefficients=_from_grid(gen, samples), modes=gen.modes)


class ModalNonlinearity:
    """g(t, y) in modal coordinates: exact forcing modes plus the projected reaction."""

    def __init__(self, gen: DiagonalGenerator, g: FieldNonlinearity, points: int):
        self.gen = gen
        self.g = g
        self.points = points
        self.x = grid_points(gen, points)

    def forcing(self, times: np.ndarray) -> np.ndarray:
        if self.g.forcing_modes is not None:
            rows = [self.g.forcing_modes(t, self.gen.modes) for t in times]
        else:
            rows = [_from_grid(self.gen, np.asarray(self.g.forcing(t, self.x), dtype=np.complex128)) for t in times]
        return np.asarray(rows, dtype=np.complex128).reshape(len(times), self.gen.size)

    def __call__(self, times: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
        """Modal g for times of shape (m,) and coefficients of shape (m, modes)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        coefficients = np.asarray(coefficients, dtype=np.complex128).reshape(times.size, self.gen.size)
        samples = _to_grid(self.gen, coefficients, self.points)
        reaction = np.asarray(self.g.reaction(times[:, None], samples), dtype=np.complex128)
        return self.forcing(times) + _from_grid(self.gen, reaction)


def phi_functions(z: np.ndarray, count: int) -> np.ndarray:
    """
    phi_1(z) .. phi_count(z), phi_k(z) = int_0^1 e^{(1-s) z} s^{k-1}/(k-1)! ds.

    Read off the first row of the exponential of an augmented matrix, which
    stays accurate for large |z| and at z = 0. Shape (len(z), count).
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    augmented = np.zeros((z.size, count + 1, count + 1), dtype=np.complex128)
    augmented[:, 0, 0] = z
    index = np.arange(count)
    augmented[:, index, index + 1] = 1.0
    return expm(augmented)[:, 0, 1:]


class ModalGreenOperator:
    """
    Per-mode scalar Green kernel on a uniform time grid:

        G_k(t, s) = c e^{lambda_k (t-s)} / (c - e^{lambda_k omega})          s <= t
                    e^{lambda_k (omega+t-s)} / (c - e^{lambda_k omega})      s > t

    applied as y_k(t) = I_k(t) + e^{lambda_k t} I_k(omega) / (c - e^{lambda_k omega})
    with the running convolution I_k(t) = int_0^t e^{lambda_k (t-s)} f_k(s) ds.
    """

    def __init__(self, gen: DiagonalGenerator, spec: PeriodicitySpec, grid: np.ndarray):
        grid = np.asarray(grid, dtype=float)
        steps = np.diff(grid)
        if grid.size < 4 or not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
            raise DomainError("the modal time grid must be uniform with at least four nodes")
        if grid[0] != 0.0 or not math.isclose(grid[-1], spec.omega, rel_tol=1e-14):
            raise DomainError(f"grid must span [0, {spec.omega}]")

        self.gen = gen
        self.spec = spec
        self.grid = grid
        h = steps[0]
        lam = gen.eigenvalues
        phis = phi_functions(lam * h, 4)
        factorials = np.array([math.factorial(m) for m in range(4)], dtype=float)

        weights = []
        for offsets in _STENCILS:
            vandermonde = np.vander(offsets.astype(float), 4, increasing=True)
            inverse = np.linalg.inv(vandermonde)
            # row i: h * sum_m inverse[m, i] m! phi_{m+1}(lambda h)
            weights.append(h * (inverse.T * factorials[None, :]) @ phis.T)
        weights = np.asarray(weights)

        panels = grid.size - 1
        kinds = np.ones(panels, dtype=int)
        kinds[0] = 0
        kinds[-1] = 2
        self.stencil = np.arange(panels)[:, None] + _STENCILS[kinds]
        self.panel_weights = weights[kinds]
        self.step = np.exp(lam * h)
        self.flow = np.exp(np.outer(grid, lam))
        self.denominator = spec.c - np.exp(lam * spec.omega)

    def convolution(self, forcing: np.ndarray) -> np.ndarray:
        """Running I_k(t_i) for forcing of shape (grid, modes)."""
        contributions = np.einsum("jik,jik->jk", self.panel_weights, forcing[self.stencil])
        running = np.zeros_like(forcing, dtype=np.complex128)
        for j, contribution in enumerate(contributions):
            running[j + 1] = self.step * running[j] + contribution
        return running

    def apply(self, forcing: np.ndarray) -> np.ndarray:
        running = self.convolution(forcing)
        return running + self.flow * (running[-1] / self.denominator)[None, :]


def scalar_green(gen: DiagonalGenerator, spec: PeriodicitySpec, index: int, t: float, s: float) -> complex:
    """G_k(t, s) for the mode at position ``index``."""
    lam = complex(gen.eigenvalues[index])
    denominator = spec.c - np.exp(lam * spec.omega)
    if s <= t:
        return complex(spec.c * np.exp(lam * (t - s)) / denominator)
    return complex(np.exp(lam * (spec.omega + t - s)) / denominator)


def _field_residuals(
    traj: FieldTrajectory,
    operator: ModalGreenOperator,
    modal_g: ModalNonlinearity,
) -> ResidualReport:
    coefficients = traj.coefficients
    boundary = float(np.linalg.norm(coefficients[-1] - traj.spec.c * coefficients[0]))
    running = operator.convolution(modal_g(traj.grid, coefficients))
    mild = coefficients - operator.flow * coefficients[0][None, :] - running
    periodicity = periodicity_defect(traj, traj.interpolate)
    return ResidualReport(boundary=boundary, ode=float(np.max(np.linalg.norm(mild, axis=1))), periodicity=periodicity)


def mild_picard_solve(
    gen: DiagonalGenerator,
    g: FieldNonlinearity,
    spec: PeriodicitySpec,
    time_grid: int = GRID_SIZE,
    tol: float = PICARD_TOL,
    max_iter: int = PICARD_MAX_ITER,
    points: Optional[int] = None,
    initial: Optional[FieldTrajectory] = None,
) -> FieldTrajectory:
    """
    Picard iteration of the mild fixed-point equation y = int_0^omega G(., s) g(s, y(s)) ds.

    Args:
        gen: Diagonal generator (nonresonance is checked through ``resolvent_norm``).
        g: Field nonlinearity.
        spec: omega, c; the norm is the L^2 norm of the coefficients.
        time_grid: Number of time nodes on [0, omega].
        tol: Stop when the largest coefficient-norm correction is at most tol.
        max_iter: Iteration budget.
        points: Spatial grid size, 4K when omitted.
        initial: Starting iterate; zero when omitted.

    Returns:
        The converged trajectory of modal coefficients.

    Raises:
        ResonanceError: c comes within the margin of some e^{lambda_k omega}.
        NonConvergenceError: budget exhausted; the last iterate is attached.
    """
    if time_grid < MIN_GRID_SIZE:
        raise DomainError(f"time_grid must be at least {MIN_GRID_SIZE}, got {time_grid}")
    _check_budget(max_iter)
    resolvent_norm(gen, spec)
    points = points or default_points(gen)
    modal_g = ModalNonlinearity(gen, g, points)
    grid = np.linspace(0.0, spec.omega, time_grid)
    operator = ModalGreenOperator(gen, spec, grid)

    if initial is not None:
        values = np.asarray(initial.interpolate(grid), dtype=np.complex128)
    else:
        values = np.zeros((time_grid, gen.size), dtype=np.complex128)

    def trajectory(current: np.ndarray, iterations: int, update: float, history: List[float]) -> FieldTrajectory:
        return FieldTrajectory(
            spec=spec,
            grid=grid,
            coefficients=current,
            modes=gen.modes,
            iterations=iterations,
            final_update=update,
            update_history=list(history),
        )

    loop = _DampedIteration()
    update = math.inf
    for iteration in range(1, max_iter + 1):
        proposal = operator.apply(modal_g(grid, values))
        update = float(np.max(np.linalg.norm(proposal - values, axis=1)))
        logger.debug("Mild Picard iteration %s: update %.3e", iteration, update)
        if update <= tol:
            loop.history.append(update)
            result = trajectory(proposal, iteration, update, loop.history)
            result.residuals = _field_residuals(result, operator, modal_g)
            logger.info("Mild Picard (%s, K=%s) converged in %s iterations", gen.name, gen.K, iteration)
            return result
        values = loop.step(values, proposal, update)

    last = trajectory(values, max_iter, update, loop.history)
    last.residuals = _field_residuals(last, operator, modal_g)
    logger.warning("Mild Picard did not converge after %s iterations (update %.3e)", max_iter, update)
    raise NonConvergenceError(
        f"mild Picard iteration did not converge in {max_iter} iterations (last update {update:.3e})",
        last_update=update,
        iterations=max_iter,
        trajectory=last,
    )


def mild_extend(traj: FieldTrajectory, t: float) -> FieldState:
    """c^k y(t - k omega), k = floor(t / omega)."""
    check_extendable(traj)
    return FieldState(coefficients=_windowed(traj, t, traj.interpolate), modes=traj.modes)


def exponential_propagate(
    gen: DiagonalGenerator,
    g: FieldNonlinearity,
    state: FieldState,
    t_start: float,
    t_end: float,
    steps: int = 10_000,
    points: Optional[int] = None,
    order: int = 2,
) -> FieldState:
    """
    Integrate the mild equation forward from ``state`` at ``t_start``.

    order 1 is exponential Euler, y+ = e^{lambda h} y + h phi_1 F(t, y); order 2
    adds the corrector h phi_2 (F(t + h, y+) - F(t, y)).
    """
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    if steps < 1 or t_end < t_start:
        raise DomainError("need t_end >= t_start and at least one step")
    modal_g = ModalNonlinearity(gen, g, points or default_points(gen))
    h = (t_end - t_start) / steps
    phis = phi_functions(gen.eigenvalues * h, 2)
    decay = np.exp(gen.eigenvalues * h)
    y = np.asarray(state.coefficients, dtype=np.complex128)

    for n in range(steps):
        t = t_start + n * h
        current = modal_g(np.array([t]), y[None, :])[0]
        predicted = decay * y + h * phis[:, 0] * current
        if order == 1:
            y = predicted
            continue
        ahead = modal_g(np.array([t + h]), predicted[None, :])[0]
        y = predicted + h * phis[:, 1] * (ahead - current)
    return FieldState(coefficients=y, modes=gen.modes)
