import dataclasses
import math

import mpmath
import numpy as np
import pytest

from models.certificate_models import BoundSource, Theorem, Verdict
from models.domain_models import PeriodicitySpec
from services.catalog import example_3_1, example_4_3, heat_cubic, schrodinger_cubic
from services.certificates import (
    GeneratorConstants,
    certify_theorem1,
    certify_theorem2,
    certify_theorem3,
    certify_theorem4,
    compute_U,
    describe_instance,
    locate_threshold,
    verify_c1,
    verify_field_c1,
)
from services.errors import DomainError, MissingConstantError
from services.kernels import compute_M
from services.linalg import NormKind
from services.nonlinearity import NonlinearitySpec
from services.spectral import DiagonalGenerator, grid_points
from conftest import SCHRODINGER_C, example_kernel

HEAT_SPEC = PeriodicitySpec(omega=math.pi, c=-1.0)
HEAT_CONSTANTS = GeneratorConstants(Q=1.0, gamma=-1.0, resolvent_norm=1.0)
SCHRODINGER_SPEC = PeriodicitySpec(omega=math.pi, c=SCHRODINGER_C)
SCHRODINGER_CONSTANTS = GeneratorConstants(Q=1.0, gamma=0.0, resolvent_norm=1.0 / math.sqrt(2.0 - math.sqrt(2.0)))

UNIQUENESS_THRESHOLDS = {NormKind.L1: 0.287549, NormKind.LINF: 0.335414, NormKind.L2: 0.502795}
EXISTENCE_THRESHOLDS = {NormKind.L1: 0.406656, NormKind.LINF: 0.335414, NormKind.L2: 0.35553}


def test_c1_residual_of_catalog_nonlinearity():
    spec = PeriodicitySpec(omega=math.pi, c=-1.0, norm=NormKind.L2)
    assert verify_c1(example_3_1(0.7, NormKind.L2), spec) <= 1e-12


def test_c1_residual_of_linear_map_vanishes():
    g = NonlinearitySpec(evaluate=lambda t, y: np.asarray(y), dim=3)
    spec = PeriodicitySpec(omega=2.0, c=0.5 + 1.5j)
    assert verify_c1(g, spec) == 0.0


def test_c1_residual_detects_wrong_multiplier():
    spec = PeriodicitySpec(omega=math.pi, c=1.0, norm=NormKind.L2)
    assert verify_c1(example_3_1(0.7, NormKind.L2), spec) > 1e-3


def test_field_c1_residual_on_grid():
    x = grid_points(DiagonalGenerator.heat_dirichlet(16), 64)
    assert verify_field_c1(heat_cubic(1.0), HEAT_SPEC, x) <= 1e-12


@pytest.mark.parametrize("norm", list(NormKind))
def test_uniqueness_threshold(norm):
    kernel = example_kernel(norm)
    threshold = UNIQUENESS_THRESHOLDS[norm]
    below = certify_theorem1(kernel, example_3_1(threshold * 0.998, norm), use_bound=BoundSource.MC)
    above = certify_theorem1(kernel, example_3_1(threshold * 1.002, norm), use_bound=BoundSource.MC)
    assert below.verdict == Verdict.CERTIFIED
    assert above.verdict == Verdict.FAILED
    assert above.bound is None
    assert "L*M" in above.reason


def test_uniqueness_bound_of_example(l2_kernel):
    certificate = certify_theorem1(l2_kernel, example_3_1(0.2, NormKind.L2))
    constants = certificate.constants
    assert certificate.theorem == Theorem.T31
    assert certificate.bound_source == BoundSource.EXACT_M
    assert constants["contraction"] == pytest.approx(constants["L"] * constants["M"])
    # g(t, 0) = (0.2 sin t, 0)
    assert constants["g_zero_norm"] == pytest.approx(0.2, rel=1e-9)
    assert certificate.bound == pytest.approx(constants["M"] * 0.2 / (1.0 - constants["contraction"]))
    assert certificate.hypotheses["lipschitz_consistent"] is True
    assert certificate.hypotheses["C1_residual"] <= 1e-12


def test_zero_nonlinearity_gives_zero_bound(l2_kernel):
    certificate = certify_theorem1(l2_kernel, example_3_1(0.0, NormKind.L2))
    assert certificate.certified
    assert certificate.contraction == 0.0
    assert certificate.bound == 0.0


def test_boundary_case(l2_kernel):
    M = compute_M(l2_kernel)
    g = dataclasses.replace(example_3_1(0.1, NormKind.L2), L=1.0 / M)
    certificate = certify_theorem1(l2_kernel, g)
    assert certificate.verdict == Verdict.FAILED
    assert certificate.reason == "boundary case"


def test_missing_lipschitz_constant(l2_kernel):
    g = NonlinearitySpec(evaluate=lambda t, y: np.zeros_like(y), dim=2)
    with pytest.raises(MissingConstantError):
        certify_theorem1(l2_kernel, g)
    with pytest.raises(MissingConstantError):
        certify_theorem2(l2_kernel, g)


def test_certificates_are_pure(l1_kernel):
    g = example_3_1(0.25, NormKind.L1)
    first = certify_theorem1(l1_kernel, g)
    second = certify_theorem1(l1_kernel, g)
    assert first.constants == second.constants
    assert first.inputs_digest == second.inputs_digest


def test_existence_bound_of_example_4_2(l1_kernel):
    for a in (1.0, 0.5):
        certificate = certify_theorem2(l1_kernel, example_3_1(a, NormKind.L1), use_bound=BoundSource.MC)
        assert certificate.certified
        assert certificate.bound / a == pytest.approx(3.47767, rel=1e-3)
        assert certificate.hypotheses["finite_dimension"] is True


@pytest.mark.parametrize("norm", list(NormKind))
def test_existence_threshold(norm):
    kernel = example_kernel(norm)
    threshold = EXISTENCE_THRESHOLDS[norm]
    below = certify_theorem2(kernel, example_4_3(threshold * 0.998, norm), use_bound=BoundSource.MC)
    above = certify_theorem2(kernel, example_4_3(threshold * 1.002, norm), use_bound=BoundSource.MC)
    assert below.certified
    assert not above.certified


def test_heat_uniqueness_constants():
    certificate = certify_theorem3(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0))
    assert certificate.theorem == Theorem.T51
    assert certificate.constants["U"] == pytest.approx(1.0 - math.exp(-math.pi), rel=1e-12)
    assert certificate.contraction == pytest.approx(0.538192, abs=1e-5)
    assert certificate.bound == pytest.approx(3.67222, rel=1e-4)


def test_schrodinger_uniqueness_constants():
    certificate = certify_theorem3(SCHRODINGER_CONSTANTS, SCHRODINGER_SPEC, schrodinger_cubic(1.0))
    assert certificate.constants["U"] == pytest.approx(4.10469, rel=1e-5)
    assert certificate.contraction == pytest.approx(0.923555, abs=1e-5)
    assert certificate.bound == pytest.approx(207.421, rel=1e-3)


def test_U_is_continuous_at_zero_growth():
    at_zero = compute_U(GeneratorConstants(1.0, 0.0, 2.0), HEAT_SPEC)
    assert at_zero == pytest.approx(2.0 * math.pi)
    for gamma in (1e-9, -1e-9):
        assert compute_U(GeneratorConstants(1.0, gamma, 2.0), HEAT_SPEC) == pytest.approx(at_zero, rel=1e-6)


def test_invalid_generator_constants():
    with pytest.raises(DomainError):
        certify_theorem3(GeneratorConstants(0.5, -1.0, 1.0), HEAT_SPEC, heat_cubic(1.0))


@pytest.mark.parametrize("eta, certified", [(0.5, True), (1.0, True), (1.03, False)])
def test_poincare_existence_verdict(eta, certified):
    certificate = certify_theorem4(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, eta))
    assert certificate.theorem == Theorem.T52
    assert certificate.certified is certified


def test_poincare_existence_without_linear_growth():
    certificate = certify_theorem4(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, 0.0))
    assert certificate.certified
    assert certificate.contraction == 0.0


def test_poincare_ball_radius_matches_high_precision():
    certificate = certify_theorem4(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, 0.5), compact_semigroup=True)
    with mpmath.workdps(30):
        q, gamma, r = mpmath.mpf(1), mpmath.mpf(-1), mpmath.mpf(1)
        omega = mpmath.pi
        g1 = mpmath.sqrt(mpmath.pi)
        g2 = mpmath.mpf("0.5")
        growth = mpmath.exp(q * g2 * omega) - 1
        lhs = q * r * mpmath.exp(gamma * omega) * growth
        spread = mpmath.exp(abs(gamma) * omega)
        xi = q * r * (g1 * spread * omega + mpmath.exp(gamma * omega) * q * g1 * omega * spread * growth) / (1 - lhs)
    assert certificate.contraction == pytest.approx(float(lhs), rel=1e-12)
    assert certificate.constants["Xi"] == pytest.approx(float(xi), rel=1e-10)
    assert certificate.hypotheses["A5_decay_witness"] is True


def test_gronwall_bound_at_start():
    certificate = certify_theorem4(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, 0.5))
    expected = 2.0 + math.sqrt(math.pi) * math.pi * math.exp(math.pi)
    assert certificate.gronwall_bound(2.0, 0.0) == pytest.approx(expected)
    uniqueness = certify_theorem3(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, 0.5))
    with pytest.raises(ValueError):
        uniqueness.gronwall_bound(2.0, 0.0)


def test_heat_thresholds_in_eta():
    def uniqueness(eta):
        return certify_theorem3(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, eta)).contraction

    def existence(eta):
        return certify_theorem4(HEAT_CONSTANTS, HEAT_SPEC, heat_cubic(1.0, eta)).contraction

    assert locate_threshold(uniqueness, 0.1, 2.0) == pytest.approx(0.929036, abs=1e-4)
    assert locate_threshold(existence, 0.1, 2.0) == pytest.approx(1.01347, abs=1e-4)


def test_threshold_needs_a_crossing():
    assert locate_threshold(lambda p: 2.0 * p, 0.0, 1.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        locate_threshold(lambda p: 0.5 * p, 0.0, 1.0)


def test_instance_description_is_stable():
    first = describe_instance(omega=math.pi, c=-1)
    assert first == describe_instance(omega=math.pi, c=-1)
    assert first != describe_instance(omega=math.pi, c=1)
    assert "sha256=" in first
