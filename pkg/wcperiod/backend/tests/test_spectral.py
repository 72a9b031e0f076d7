import math

import numpy as np
import pytest

from models.domain_models import PeriodicitySpec
from services.catalog import heat_cubic, schrodinger_cubic
from services.certificates import certify_theorem3
from services.errors import AliasingError, DomainError, ResonanceError
from services.kernels import GreenKernelODE, kernel_K
from services.nonlinearity import FieldNonlinearity
from services.spectral import (
    DiagonalGenerator,
    FieldState,
    ModalGreenOperator,
    exponential_propagate,
    generator_constants,
    grid_transform,
    growth_bound_holds,
    inverse_grid_transform,
    mild_extend,
    mild_picard_solve,
    phi_functions,
    resolvent_norm,
    scalar_green,
    semigroup_apply,
)
from conftest import SCHRODINGER_C

HEAT_SPEC = PeriodicitySpec(omega=math.pi, c=-1.0)
SCHRODINGER_SPEC = PeriodicitySpec(omega=math.pi, c=SCHRODINGER_C)


def unit_state(gen: DiagonalGenerator, mode: int) -> FieldState:
    coefficients = np.zeros(gen.size, dtype=np.complex128)
    coefficients[list(gen.modes).index(mode)] = 1.0
    return FieldState(coefficients=coefficients, modes=gen.modes)


def random_state(gen: DiagonalGenerator, seed: int) -> FieldState:
    rng = np.random.default_rng(seed)
    coefficients = rng.standard_normal(gen.size) + 1j * rng.standard_normal(gen.size)
    return FieldState(coefficients=coefficients, modes=gen.modes)


@pytest.fixture(scope="module")
def heat_solution():
    gen = DiagonalGenerator.heat_dirichlet(64)
    return gen, mild_picard_solve(gen, heat_cubic(1.0, 0.5), HEAT_SPEC)


def test_semigroup_identity_and_decay():
    gen = DiagonalGenerator.heat_dirichlet(8)
    state = random_state(gen, 1)
    assert np.array_equal(semigroup_apply(gen, 0.0, state).coefficients, state.coefficients)
    assert semigroup_apply(gen, 0.7, unit_state(gen, 3)).norm() == pytest.approx(math.exp(-9 * 0.7), rel=1e-14)
    assert semigroup_apply(gen, 0.7, state).norm() <= math.exp(-0.7) * state.norm()


def test_heat_semigroup_is_forward_only():
    gen = DiagonalGenerator.heat_dirichlet(8)
    with pytest.raises(DomainError):
        semigroup_apply(gen, -0.1, unit_state(gen, 1))


def test_schrodinger_group_preserves_norm():
    gen = DiagonalGenerator.schrodinger_periodic(8)
    state = random_state(gen, 2)
    for t in (0.37, -1.2):
        assert semigroup_apply(gen, t, state).norm() == pytest.approx(state.norm(), rel=1e-12)


def test_growth_bounds_hold():
    times = np.linspace(0.0, 2.0 * math.pi, 50)
    assert growth_bound_holds(DiagonalGenerator.heat_dirichlet(32), times)
    assert growth_bound_holds(DiagonalGenerator.schrodinger_periodic(32), times)


def test_heat_resolvent_norm_is_attained_in_the_tail():
    assert resolvent_norm(DiagonalGenerator.heat_dirichlet(64), HEAT_SPEC) == pytest.approx(1.0, abs=1e-12)


def test_schrodinger_resolvent_norm():
    value = resolvent_norm(DiagonalGenerator.schrodinger_periodic(16), SCHRODINGER_SPEC)
    assert value == pytest.approx(1.0 / math.sqrt(2.0 - math.sqrt(2.0)), rel=1e-9)
    assert value == pytest.approx(1.30656, rel=1e-5)


def test_single_mode_resolvent():
    gen = DiagonalGenerator.from_eigenvalues([0.0])
    assert resolvent_norm(gen, PeriodicitySpec(omega=1.0, c=2.0)) == pytest.approx(1.0)


def test_irrational_period_uses_the_dense_circle():
    gen = DiagonalGenerator.schrodinger_periodic(8)
    assert resolvent_norm(gen, PeriodicitySpec(omega=1.0, c=2.0)) == pytest.approx(1.0)
    with pytest.raises(ResonanceError) as info:
        resolvent_norm(gen, PeriodicitySpec(omega=1.0, c=complex(math.cos(0.3), math.sin(0.3))))
    assert info.value.mode is None


def test_resonant_heat_mode():
    with pytest.raises(ResonanceError) as info:
        resolvent_norm(DiagonalGenerator.heat_dirichlet(8), PeriodicitySpec(omega=math.pi, c=math.exp(-math.pi)))
    assert info.value.mode == 1


def test_resonant_schrodinger_mode():
    with pytest.raises(ResonanceError) as info:
        resolvent_norm(DiagonalGenerator.schrodinger_periodic(8), PeriodicitySpec(omega=math.pi, c=1.0))
    assert info.value.mode % 2 == 0


def test_generator_constants():
    constants = generator_constants(DiagonalGenerator.heat_dirichlet(16), HEAT_SPEC)
    assert (constants.Q, constants.gamma) == (1.0, -1.0)
    assert constants.resolvent_norm == pytest.approx(1.0)


@pytest.mark.parametrize("factory", [DiagonalGenerator.heat_dirichlet, DiagonalGenerator.schrodinger_periodic])
def test_grid_transform_round_trip_and_parseval(factory):
    gen = factory(16)
    state = random_state(gen, 5)
    x, samples = grid_transform(gen, state, 64)
    back = inverse_grid_transform(gen, samples)
    assert np.allclose(back.coefficients, state.coefficients, atol=1e-12)
    if gen.name == "heat_dirichlet":
        weight = math.pi / (x.size + 1)
    else:
        weight = 2.0 * math.pi / x.size
    assert weight * np.sum(np.abs(samples) ** 2) == pytest.approx(np.sum(np.abs(state.coefficients) ** 2), rel=1e-10)


def test_sine_basis_samples():
    gen = DiagonalGenerator.heat_dirichlet(4)
    x, samples = grid_transform(gen, unit_state(gen, 3), 16)
    assert np.allclose(samples, math.sqrt(2.0 / math.pi) * np.sin(3 * x), atol=1e-13)


def test_exponential_basis_samples():
    gen = DiagonalGenerator.schrodinger_periodic(4)
    x, samples = grid_transform(gen, unit_state(gen, -2), 16)
    assert np.allclose(samples, np.exp(-2j * x) / math.sqrt(2.0 * math.pi), atol=1e-13)


def test_coarse_grid_is_rejected():
    gen = DiagonalGenerator.heat_dirichlet(16)
    with pytest.raises(AliasingError):
        grid_transform(gen, unit_state(gen, 1), 33)


def test_phi_functions():
    at_zero = phi_functions(np.array([0.0]), 4)[0]
    assert np.allclose(at_zero, [1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0], atol=1e-15)
    at_minus_one = phi_functions(np.array([-1.0]), 2)[0]
    assert at_minus_one[0] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)
    assert at_minus_one[1] == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_scalar_green_matches_matrix_kernel():
    gen = DiagonalGenerator.heat_dirichlet(5)
    for index, k in enumerate(gen.modes):
        kernel = GreenKernelODE([[-float(k) ** 2]], HEAT_SPEC)
        for t, s in ((0.3, 0.1), (0.3, 2.0), (2.9, 2.9), (0.0, math.pi)):
            expected = kernel_K(kernel, t, s)[0, 0]
            assert scalar_green(gen, HEAT_SPEC, index, t, s) == pytest.approx(expected, abs=1e-12)


def test_modal_operator_needs_a_uniform_grid():
    gen = DiagonalGenerator.heat_dirichlet(4)
    grid = np.concatenate([[0.0], np.sort(np.random.default_rng(0).uniform(0.1, 3.0, 8)), [math.pi]])
    with pytest.raises(DomainError):
        ModalGreenOperator(gen, HEAT_SPEC, grid)


def test_forced_heat_without_reaction_matches_closed_form():
    # mode k: y_k = b_k (alpha sin t + beta cos t), alpha = -lambda/(1+lambda^2), beta = -1/(1+lambda^2)
    gen = DiagonalGenerator.heat_dirichlet(16)
    g = heat_cubic(1.0, 0.0)
    traj = mild_picard_solve(gen, g, HEAT_SPEC)
    lam = gen.eigenvalues.real
    b = g.forcing_modes(math.pi / 2, gen.modes).real
    alpha = -lam / (1.0 + lam**2)
    beta = -1.0 / (1.0 + lam**2)
    expected = b[None, :] * (np.outer(np.sin(traj.grid), alpha) + np.outer(np.cos(traj.grid), beta))
    assert traj.iterations == 2
    assert np.max(np.abs(traj.coefficients - expected)) <= 1e-8


def test_modes_stay_decoupled():
    gen = DiagonalGenerator.heat_dirichlet(8)

    def forcing_modes(t, modes):
        return np.where(np.asarray(modes) == 3, math.sin(t), 0.0).astype(np.complex128)

    g = FieldNonlinearity(
        forcing=lambda t, x: math.sin(t) * math.sqrt(2.0 / math.pi) * np.sin(3 * np.asarray(x)),
        reaction=lambda t, u: np.zeros_like(u),
        forcing_norm=lambda t: np.abs(np.sin(t)),
        forcing_modes=forcing_modes,
        L=0.0,
    )
    traj = mild_picard_solve(gen, g, HEAT_SPEC, time_grid=65)
    others = np.delete(traj.coefficients, 2, axis=1)
    assert np.max(np.abs(others)) <= 1e-12
    assert np.max(np.abs(traj.coefficients[:, 2])) > 0.01


def test_forced_heat_solution(heat_solution):
    gen, traj = heat_solution
    certificate = certify_theorem3(generator_constants(gen, HEAT_SPEC), HEAT_SPEC, heat_cubic(1.0, 0.5))
    assert certificate.certified
    assert traj.sup_norm() <= certificate.bound * (1.0 + 1e-3)
    assert traj.residuals.boundary <= 1e-9
    assert traj.residuals.ode <= 1e-6


def test_truncation_level_barely_matters(heat_solution):
    _, fine = heat_solution
    coarse = mild_picard_solve(DiagonalGenerator.heat_dirichlet(32), heat_cubic(1.0, 0.5), HEAT_SPEC)
    assert abs(coarse.sup_norm() - fine.sup_norm()) <= 1e-6


def test_extension_is_antiperiodic(heat_solution):
    _, traj = heat_solution
    ahead = mild_extend(traj, 0.4 + math.pi).coefficients
    here = mild_extend(traj, 0.4).coefficients
    assert np.allclose(ahead, -here, atol=1e-12)


def test_forward_integration_reproduces_the_periodic_solution(heat_solution):
    gen, traj = heat_solution
    horizon = 1.5 * math.pi
    propagated = exponential_propagate(gen, heat_cubic(1.0, 0.5), mild_extend(traj, 0.0), 0.0, horizon)
    assert np.linalg.norm(propagated.coefficients - mild_extend(traj, horizon).coefficients) <= 1e-5


def test_schrodinger_solution_within_bound():
    gen = DiagonalGenerator.schrodinger_periodic(16)
    g = schrodinger_cubic(0.01)
    traj = mild_picard_solve(gen, g, SCHRODINGER_SPEC, max_iter=400)
    certificate = certify_theorem3(generator_constants(gen, SCHRODINGER_SPEC), SCHRODINGER_SPEC, g)
    assert certificate.certified
    assert traj.residuals.boundary <= 1e-9
    assert traj.sup_norm() <= certificate.bound * (1.0 + 1e-3)
