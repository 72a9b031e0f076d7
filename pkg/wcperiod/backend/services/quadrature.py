"""
Composite Gauss-Legendre quadrature.

Panels whose Gauss value disagrees with the sum over their two halves are
bisected, so integrands with isolated kinks (norms of matrix families under
the L1/LINF norms) still reach the target accuracy.
"""

import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

from services.config import QUAD_ABS_TOL, QUAD_MAX_DEPTH

logger = logging.getLogger(__name__)

_REL_TOL = 1e-13


@lru_cache(maxsize=32)
def gauss_legendre_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] (read-only arrays)."""
    if n < 1:
        raise ValueError(f"need at least one node, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(a: float, b: float, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened nodes and weights of the composite rule on [a, b], in panel order."""
    edges = np.linspace(a, b, panels + 1)
    return _panel_nodes(edges[:-1], edges[1:], nodes)


def _panel_nodes(lo: np.ndarray, hi: np.ndarray, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre_rule(nodes)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    points = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return points.ravel(), weights.ravel()


def _panel_sums(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray, nodes: int) -> np.ndarray:
    points, weights = _panel_nodes(lo, hi, nodes)
    values = np.asarray(f(points), dtype=float)
    return (weights * values).reshape(lo.size, nodes).sum(axis=1)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: int,
    nodes: int,
    abs_tol: float = QUAD_ABS_TOL,
    max_depth: int = QUAD_MAX_DEPTH,
) -> float:
    """
    Integrate a vectorized real function over [a, b].

    Args:
        f: callable mapping a 1-D array of abscissae to values
        a, b: interval ends (a <= b)
        panels: initial number of equal panels
        nodes: Gauss-Legendre nodes per panel
        abs_tol: absolute tolerance spread over the interval by panel width
        max_depth: bisection levels before a panel is accepted as is

    Returns:
        The integral value. Contributions are reduced in panel order, so the
        result does not depend on evaluation scheduling.
    """
    if b < a:
        raise ValueError(f"interval must satisfy a <= b, got [{a}, {b}]")
    if b == a:
        return 0.0

    length = b - a
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    coarse = _panel_sums(f, lo, hi, nodes)

    # (left edge, value) pairs, sorted at the end to restore panel order
    accepted_lo = []
    accepted_val = []

    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        left = _panel_sums(f, lo, mid, nodes)
        right = _panel_sums(f, mid, hi, nodes)
        fine = left + right
        tol = abs_tol * (hi - lo) / length + _REL_TOL * np.abs(fine)
        done = np.abs(fine - coarse) <= tol
        if depth == max_depth:
            done[:] = True
            if not np.all(np.abs(fine - coarse) <= tol):
                logger.debug("Quadrature depth limit reached on %s panels", int(np.sum(~done)))

        accepted_lo.append(lo[done])
        accepted_val.append(fine[done])

        if np.all(done):
            break
        keep = ~done
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        coarse = np.concatenate([left[keep], right[keep]])

    starts = np.concatenate(accepted_lo)
    values = np.concatenate(accepted_val)
    return float(np.sum(values[np.argsort(starts, kind="stable")]))
