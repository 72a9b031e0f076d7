import math

import numpy as np
import pytest

from services.errors import DomainError, OverflowComputationError, ResonanceError
from services.linalg import (
    NormKind,
    complex_matrix,
    induced_norm,
    matrix_exponential,
    nonresonance_margin,
    nonresonance_resolvent,
    spectrum,
    vector_norm,
)
from services.catalog import EXAMPLE_MATRIX


def test_example_spectrum():
    values = spectrum(complex_matrix(EXAMPLE_MATRIX))
    assert values[0] == pytest.approx(-4.0, abs=1e-12)
    assert values[1] == pytest.approx(-2.0, abs=1e-12)


def test_closed_form_spectrum_matches_lapack():
    rng = np.random.default_rng(7)
    for _ in range(50):
        A = complex_matrix(rng.uniform(-3, 3, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2)))
        fast = spectrum(A)
        slow = np.array(spectrum(A, fast_path=False))
        for value in fast:
            assert np.min(np.abs(slow - value)) < 1e-9


def test_induced_norms():
    A = complex_matrix([[1, -2], [3, 4]])
    assert induced_norm(A, NormKind.L1) == pytest.approx(6.0)
    assert induced_norm(A, NormKind.LINF) == pytest.approx(7.0)
    assert induced_norm(A, NormKind.L2) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0])


def test_induced_norm_of_stack():
    stack = np.stack([np.eye(2), 2 * np.eye(2), 3 * np.eye(2)])
    assert np.allclose(induced_norm(stack, NormKind.L2), [1.0, 2.0, 3.0])


def test_vector_norms():
    v = np.array([3.0, -4.0j])
    assert vector_norm(v, NormKind.L1) == pytest.approx(7.0)
    assert vector_norm(v, NormKind.L2) == pytest.approx(5.0)
    assert vector_norm(v, NormKind.LINF) == pytest.approx(4.0)


def test_complex_matrix_rejects_bad_input():
    with pytest.raises(DomainError):
        complex_matrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(DomainError):
        complex_matrix([[1, math.nan], [0, 1]])


def test_complex_matrix_is_read_only():
    A = complex_matrix([[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        A[0, 0] = 2


def test_exponential_of_diagonal():
    A = complex_matrix([[-1, 0], [0, 2j]])
    expected = np.diag([math.exp(-0.5), complex(math.cos(1.0), math.sin(1.0))])
    assert np.allclose(matrix_exponential(A, 0.5), expected, atol=1e-14)


def test_exponential_overflow():
    with pytest.raises(OverflowComputationError):
        matrix_exponential(complex_matrix([[1000.0]]), 1000.0)


def test_resonant_multiplier_rejected():
    with pytest.raises(ResonanceError) as info:
        nonresonance_resolvent(complex_matrix(np.zeros((2, 2))), 1.0, 1.0)
    assert info.value.eigenvalue == 0
    assert info.value.distance == pytest.approx(0.0)


def test_margin_reports_closest_eigenvalue():
    margin, eigenvalue = nonresonance_margin(complex_matrix(EXAMPLE_MATRIX), math.pi, -1.0)
    assert eigenvalue == pytest.approx(-4.0)
    assert margin == pytest.approx(1.0 + math.exp(-4.0 * math.pi))


def test_resolvent_commutes_with_flow():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(100):
        dim = int(rng.integers(2, 4))
        A = complex_matrix(rng.uniform(-1, 1, (dim, dim)))
        c = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if abs(c) < 1e-3 or nonresonance_margin(A, 1.0, c)[0] < 1e-2:
            continue
        R = nonresonance_resolvent(A, 1.0, c)
        flow = matrix_exponential(A, float(rng.uniform(0, 1)))
        scale = 1.0 + np.linalg.norm(R) * np.linalg.norm(flow)
        assert np.max(np.abs(R @ flow - flow @ R)) <= 1e-10 * scale
        checked += 1
    assert checked > 50


def _random_nonresonant(rng, max_dim=4, margin=0.1):
    while True:
        dim = int(rng.integers(1, max_dim + 1))
        A = complex_matrix(rng.uniform(-1, 1, (dim, dim)) + 1j * rng.uniform(-1, 1, (dim, dim)))
        omega = float(rng.uniform(0.5, 2.0))
        c = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if abs(c) > 1e-2 and nonresonance_margin(A, omega, c)[0] >= margin:
            return A, omega, c


def test_resolvent_inverts_from_both_sides():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        A, omega, c = _random_nonresonant(rng)
        R = nonresonance_resolvent(A, omega, c)
        flow = matrix_exponential(A, omega)
        identity = np.eye(A.shape[0])
        scale = 1.0 + np.linalg.norm(R, 2) * (abs(c) + np.linalg.norm(flow, 2))
        assert np.linalg.norm(c * R - flow @ R - identity, 2) <= 1e-10 * scale
        assert np.linalg.norm(c * R - R @ flow - identity, 2) <= 1e-10 * scale


def test_semigroup_law():
    rng = np.random.default_rng(5)
    for _ in range(50):
        dim = int(rng.integers(1, 9))
        A = complex_matrix(rng.uniform(-2, 2, (dim, dim)))
        t, s = rng.uniform(-2, 2, 2)
        left = matrix_exponential(A, t + s)
        right = matrix_exponential(A, t) @ matrix_exponential(A, s)
        scale = np.linalg.norm(matrix_exponential(A, t), 2) * np.linalg.norm(matrix_exponential(A, s), 2)
        assert np.linalg.norm(left - right, 2) <= 1e-9 * (1.0 + scale)


def test_flow_spectrum_is_exponential_of_spectrum():
    rng = np.random.default_rng(9)
    for _ in range(50):
        dim = int(rng.integers(1, 5))
        A = complex_matrix(rng.uniform(-1, 1, (dim, dim)) + 1j * rng.uniform(-1, 1, (dim, dim)))
        t = float(rng.uniform(0, 2))
        flow_values = np.array(spectrum(complex_matrix(matrix_exponential(A, t)), fast_path=False))
        for lam in spectrum(A, fast_path=False):
            expected = np.exp(lam * t)
            assert np.min(np.abs(flow_values - expected)) <= 1e-8 * max(1.0, abs(expected))


def test_induced_norm_equivalences():
    rng = np.random.default_rng(13)
    for _ in range(100):
        dim = int(rng.integers(1, 7))
        A = rng.uniform(-3, 3, (dim, dim)) + 1j * rng.uniform(-3, 3, (dim, dim))
        one, two, inf = (induced_norm(A, kind) for kind in (NormKind.L1, NormKind.L2, NormKind.LINF))
        root = math.sqrt(dim)
        slack = 1.0 + 1e-12
        assert two <= math.sqrt(one * inf) * slack
        assert one / root <= two * slack and two <= root * one * slack
        assert inf / root <= two * slack and two <= root * inf * slack
        assert one <= dim * inf * slack and inf <= dim * one * slack


def test_example_flow_over_one_window():
    flow = matrix_exponential(complex_matrix(EXAMPLE_MATRIX), math.pi)
    # A = P diag(-2, -4) P^{-1} with eigenvectors (1, 1) and (2, 3)
    P = np.array([[1.0, 2.0], [1.0, 3.0]])
    expected = P @ np.diag([math.exp(-2 * math.pi), math.exp(-4 * math.pi)]) @ np.linalg.inv(P)
    assert np.allclose(flow, expected, rtol=0, atol=1e-14)
    values = spectrum(complex_matrix(flow))
    assert values[0] == pytest.approx(math.exp(-4 * math.pi), rel=1e-9)
    assert values[1] == pytest.approx(math.exp(-2 * math.pi), rel=1e-9)


def test_example_resolvent_matches_closed_form():
    R = nonresonance_resolvent(complex_matrix(EXAMPLE_MATRIX), math.pi, -1.0)
    q = math.exp(4 * math.pi) / (1 + math.exp(4 * math.pi))
    e = math.exp(math.pi) / math.cosh(math.pi)
    expected = np.array(
        [
            [2 * q - 1.5 * e, e - 2 * q],
            [3 * q - 1.5 * e, e - 3 * q],
        ]
    )
    assert np.allclose(matrix_exponential(complex_matrix(EXAMPLE_MATRIX), 0.0) @ R, expected, rtol=0, atol=1e-12)
