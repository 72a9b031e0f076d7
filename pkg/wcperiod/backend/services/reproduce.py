"""
Recompute the published constants of the worked examples.

Each example id maps to a list of rows (quantity, published value, computed
value, tolerance); ``reproduce`` returns them as a DataFrame with the relative
(or absolute) difference and a pass flag.
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple

import pandas as pd

from models.certificate_models import BoundSource
from models.domain_models import PeriodicitySpec, QuadratureSpec
from services.catalog import (
    EXAMPLE_C,
    EXAMPLE_MATRIX,
    EXAMPLE_OMEGA,
    example_3_1,
    heat_cubic,
    heat_reaction_slope,
    maximize_slope,
    schrodinger_cubic,
    schrodinger_reaction_slope,
)
from services.certificates import (
    GeneratorConstants,
    certify_theorem1,
    certify_theorem2,
    certify_theorem3,
    certify_theorem4,
    locate_threshold,
)
from services.kernels import GreenKernelODE, bound_M_integral
from services.linalg import NormKind, complex_matrix, spectrum
from services.spectral import DiagonalGenerator, resolvent_norm

logger = logging.getLogger(__name__)

HEAT_K = 64
SCHRODINGER_K = 16
SCHRODINGER_C = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))


class Row(NamedTuple):
    quantity: str
    published: float
    computed: float
    tolerance: float
    relative: bool = True


def _example_kernel(norm: NormKind) -> GreenKernelODE:
    return GreenKernelODE(EXAMPLE_MATRIX, PeriodicitySpec(omega=EXAMPLE_OMEGA, c=EXAMPLE_C, norm=norm))


def _mc(norm: NormKind) -> float:
    return bound_M_integral(_example_kernel(norm), QuadratureSpec())


def _certificate_flip(norm: NormKind) -> float:
    """|a| where the uniqueness certificate of the example changes verdict."""
    kernel = _example_kernel(norm)

    def contraction(a: float) -> float:
        return certify_theorem1(kernel, example_3_1(a, norm), use_bound=BoundSource.MC).contraction

    return locate_threshold(contraction, 0.05, 2.0)


def _example_3_1() -> List[Row]:
    eigenvalues = spectrum(complex_matrix(EXAMPLE_MATRIX))
    rows = [
        Row("eigenvalue 1", -4.0, eigenvalues[0].real, 1e-10, relative=False),
        Row("eigenvalue 2", -2.0, eigenvalues[1].real, 1e-10, relative=False),
    ]
    lipschitz_per_a = {NormKind.L1: 2.0, NormKind.LINF: 2.0, NormKind.L2: math.sqrt(2.0)}
    published_m = {NormKind.L1: 1.73883, NormKind.LINF: 1.4907, NormKind.L2: 1.40635}
    published_threshold = {NormKind.L1: 0.287549, NormKind.LINF: 0.335414, NormKind.L2: 0.502795}
    for norm in (NormKind.L1, NormKind.LINF, NormKind.L2):
        m = _mc(norm)
        rows.append(Row(f"Mc ({norm.value})", published_m[norm], m, 1e-3))
        rows.append(Row(f"|a| threshold LM<1 ({norm.value})", published_threshold[norm], 1.0 / (lipschitz_per_a[norm] * m), 1e-3))
        rows.append(Row(f"|a| where T31 flips ({norm.value})", published_threshold[norm], _certificate_flip(norm), 1e-3))
    return rows


def _example_4_2() -> List[Row]:
    spec = PeriodicitySpec(omega=EXAMPLE_OMEGA, c=EXAMPLE_C, norm=NormKind.L1)
    kernel = GreenKernelODE(EXAMPLE_MATRIX, spec)
    certificate = certify_theorem2(kernel, example_3_1(1.0, NormKind.L1), use_bound=BoundSource.MC)
    return [Row("bound / |a| (l1, g1 = 2|a|, g2 = 0)", 3.47767, certificate.bound, 1e-3)]


def _example_4_3() -> List[Row]:
    # (g2 per unit |a|, published threshold)
    cases = {
        NormKind.L1: (math.sqrt(2.0), 0.406656),
        NormKind.LINF: (2.0, 0.335414),
        NormKind.L2: (2.0, 0.35553),
    }
    rows = []
    for norm, (growth, published) in cases.items():
        rows.append(Row(f"|a| threshold g2 M<1 ({norm.value})", published, 1.0 / (growth * _mc(norm)), 1e-3))
    return rows


def _heat_rows(a: float = 1.0) -> List[Row]:
    gen = DiagonalGenerator.heat_dirichlet(HEAT_K)
    spec = PeriodicitySpec(omega=math.pi, c=-1.0)
    norm = resolvent_norm(gen, spec)
    certificate = certify_theorem3(GeneratorConstants(gen.Q, gen.gamma, norm), spec, heat_cubic(a, 0.5))
    return [
        Row("resolvent norm", 1.0, norm, 1e-9, relative=False),
        Row("U", 1.0 - math.exp(-math.pi), certificate.constants["U"], 1e-9),
        Row("LU", 0.538192, certificate.contraction, 1e-5, relative=False),
        Row("bound / |a|", 3.67222, certificate.bound / abs(a), 1e-4),
        Row("Lipschitz of u^3/(2(u^2+1))", 9.0 / 16.0, maximize_slope(heat_reaction_slope), 1e-6, relative=False),
    ]


def _schrodinger_rows(a: float = 1.0) -> List[Row]:
    gen = DiagonalGenerator.schrodinger_periodic(SCHRODINGER_K)
    spec = PeriodicitySpec(omega=math.pi, c=SCHRODINGER_C)
    norm = resolvent_norm(gen, spec)
    certificate = certify_theorem3(GeneratorConstants(gen.Q, gen.gamma, norm), spec, schrodinger_cubic(a))
    return [
        Row("resolvent norm", 1.30656, norm, 1e-5),
        Row("U", 4.10469, certificate.constants["U"], 1e-5),
        Row("LU", 0.923555, certificate.contraction, 1e-5, relative=False),
        Row("bound / |a|", 207.421, certificate.bound / abs(a), 1e-3),
        Row("Lipschitz of the cubic", 9.0 / 40.0, maximize_slope(schrodinger_reaction_slope), 1e-6, relative=False),
    ]


def _example_5_6() -> List[Row]:
    gen = DiagonalGenerator.heat_dirichlet(HEAT_K)
    spec = PeriodicitySpec(omega=math.pi, c=-1.0)
    constants = GeneratorConstants(gen.Q, gen.gamma, resolvent_norm(gen, spec))

    def uniqueness(eta: float) -> float:
        return certify_theorem3(constants, spec, heat_cubic(1.0, eta)).contraction

    def existence(eta: float) -> float:
        return certify_theorem4(constants, spec, heat_cubic(1.0, eta)).contraction

    return [
        Row("eta threshold LU<1", 0.929036, locate_threshold(uniqueness, 0.1, 2.0), 1e-4, relative=False),
        Row("eta threshold Poincare map", 1.01347, locate_threshold(existence, 0.1, 2.0), 1e-4, relative=False),
    ]


EXAMPLES: Dict[str, Callable[[], List[Row]]] = {
    "3.1": _example_3_1,
    "4.2": _example_4_2,
    "4.3": _example_4_3,
    "5.4": _heat_rows,
    "5.5": _schrodinger_rows,
    "5.6": _example_5_6,
}


def reproduce(example_id: str) -> pd.DataFrame:
    """
    Comparison table for one example.

    Raises:
        KeyError: unknown example id.
    """
    if example_id not in EXAMPLES:
        raise KeyError(f"unknown example {example_id!r}; known: {sorted(EXAMPLES)}")
    rows = EXAMPLES[example_id]()
    table = pd.DataFrame([row._asdict() for row in rows])
    absolute = (table["computed"] - table["published"]).abs()
    table["difference"] = absolute.where(~table["relative"], absolute / table["published"].abs())
    table["ok"] = table["difference"] <= table["tolerance"]
    logger.info("Example %s: %s/%s rows within tolerance", example_id, int(table["ok"].sum()), len(table))
    return table


def all_within_tolerance(table: pd.DataFrame) -> bool:
    return bool(table["ok"].all())
