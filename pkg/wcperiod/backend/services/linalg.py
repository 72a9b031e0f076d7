"""
Dense complex linear algebra for the bounded-operator case.

Matrices are plain ``numpy`` arrays of dtype complex128. The constructor
``complex_matrix`` enforces the invariants (square, finite) and returns a
read-only array so values can be shared freely between threads.
"""

import cmath
import logging
from enum import Enum
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm

from services.config import MARGIN_TOL
from services.errors import (
    ConvergenceFailureError,
    DomainError,
    OverflowComputationError,
    ResonanceError,
    SingularityError,
)

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray

_FAST_PATH_MAX_DIM = 2


class NormKind(str, Enum):
    """Vector norm on C^n; matrices use the induced operator norm."""

    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @property
    def ord(self) -> Union[int, float]:
        return {NormKind.L1: 1, NormKind.L2: 2, NormKind.LINF: np.inf}[self]


def complex_matrix(entries: Union[Sequence[Sequence[complex]], np.ndarray]) -> ComplexMatrix:
    """Validate and freeze a square complex matrix."""
    matrix = np.array(entries, dtype=np.complex128)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DomainError(f"matrix must be square and non-empty, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise DomainError("matrix entries must be finite")
    matrix.setflags(write=False)
    return matrix


def _check_finite(A: np.ndarray, what: str = "matrix") -> None:
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{what} has non-finite entries")


def matrix_exponential(A: ComplexMatrix, t: float) -> ComplexMatrix:
    """Return e^{At} (scaling and squaring with a diagonal Pade approximant)."""
    _check_finite(A)
    if not np.isfinite(t):
        raise DomainError(f"time must be finite, got {t}")
    with np.errstate(over="ignore", invalid="ignore"):
        result = expm(np.asarray(A, dtype=np.complex128) * t)
    if not np.all(np.isfinite(result)):
        raise OverflowComputationError(f"e^(At) overflows at t={t}")
    return result


def matrix_exponentials(A: ComplexMatrix, times: np.ndarray) -> np.ndarray:
    """Stack of e^{A t_i} for a 1-D array of times, shape (len(times), n, n)."""
    _check_finite(A)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros((0,) + A.shape, dtype=np.complex128)
    if not np.all(np.isfinite(times)):
        raise DomainError("times must be finite")
    with np.errstate(over="ignore", invalid="ignore"):
        result = expm(times[:, None, None] * np.asarray(A, dtype=np.complex128)[None, :, :])
    if not np.all(np.isfinite(result)):
        raise OverflowComputationError("e^(At) overflows on the requested time grid")
    return result


def _sorted_eigenvalues(values: np.ndarray) -> List[complex]:
    return sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag))


def _closed_form_spectrum(A: ComplexMatrix) -> np.ndarray:
    if A.shape[0] == 1:
        return np.array([A[0, 0]])
    half_trace = 0.5 * (A[0, 0] + A[1, 1])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    root = cmath.sqrt(half_trace * half_trace - det)
    return np.array([half_trace + root, half_trace - root])


def spectrum(A: ComplexMatrix, fast_path: bool = True) -> List[complex]:
    """
    Eigenvalues of A with multiplicity, sorted by (real, imag).

    dim <= 2 uses the closed form unless ``fast_path`` is False; larger
    matrices go through LAPACK (Hessenberg reduction + shifted QR).
    """
    _check_finite(A)
    if fast_path and A.shape[0] <= _FAST_PATH_MAX_DIM:
        return _sorted_eigenvalues(_closed_form_spectrum(A))
    try:
        values = np.linalg.eigvals(np.asarray(A, dtype=np.complex128))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailureError(f"eigenvalue iteration did not converge: {exc}") from exc
    return _sorted_eigenvalues(values)


def induced_norm(A: np.ndarray, kind: NormKind) -> Union[float, np.ndarray]:
    """
    Operator norm induced by the vector norm ``kind``.

    Accepts a single matrix or a stack (..., n, n); for a stack an array of
    norms is returned. L1 is the max column sum, LINF the max row sum and L2
    the largest singular value.
    """
    A = np.asarray(A)
    _check_finite(A)
    kind = NormKind(kind)
    norms = np.linalg.norm(A, ord=kind.ord, axis=(-2, -1))
    return float(norms) if np.ndim(norms) == 0 else norms


def vector_norm(v: np.ndarray, kind: NormKind) -> Union[float, np.ndarray]:
    """Vector norm along the last axis."""
    norms = np.linalg.norm(np.asarray(v), ord=NormKind(kind).ord, axis=-1)
    return float(norms) if np.ndim(norms) == 0 else norms


def nonresonance_margin(A: ComplexMatrix, omega: float, c: complex) -> Tuple[float, complex]:
    """Smallest |c - e^{omega*lambda}| over the spectrum, with the eigenvalue attaining it."""
    eigenvalues = spectrum(A)
    distances = [abs(c - cmath.exp(omega * lam)) for lam in eigenvalues]
    idx = int(np.argmin(distances))
    return float(distances[idx]), eigenvalues[idx]


def nonresonance_resolvent(
    A: ComplexMatrix,
    omega: float,
    c: complex,
    margin_tol: float = MARGIN_TOL,
) -> ComplexMatrix:
    """
    Return R = (cI - e^{A omega})^{-1}.

    Raises ResonanceError when some eigenvalue puts e^{omega*lambda} within
    ``margin_tol`` of c.
    """
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if c == 0:
        raise DomainError("c must be nonzero")

    margin, eigenvalue = nonresonance_margin(A, omega, c)
    if margin < margin_tol:
        raise ResonanceError(
            f"c={c} resonates with eigenvalue {eigenvalue}: "
            f"|c - e^(omega*lambda)| = {margin:.3e} < {margin_tol:.1e}",
            eigenvalue=eigenvalue,
            distance=margin,
        )

    n = A.shape[0]
    monodromy = matrix_exponential(A, omega)
    try:
        resolvent = np.linalg.solve(c * np.eye(n) - monodromy, np.eye(n, dtype=np.complex128))
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"cI - e^(A omega) is singular: {exc}") from exc
    if not np.all(np.isfinite(resolvent)):
        raise SingularityError("resolvent has non-finite entries")

    logger.debug("Resolvent built: dim=%s margin=%.3e", n, margin)
    return resolvent
