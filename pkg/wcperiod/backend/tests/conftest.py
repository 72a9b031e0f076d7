import math
import sys
from pathlib import Path

import pytest

BACKEND_DIR = Path(__file__).resolve().parent.parent
REPO_ROOT = BACKEND_DIR.parent.parent
if str(BACKEND_DIR) not in sys.path:
    sys.path.insert(0, str(BACKEND_DIR))

from models.domain_models import PeriodicitySpec  # noqa: E402
from services.catalog import EXAMPLE_C, EXAMPLE_MATRIX, EXAMPLE_OMEGA  # noqa: E402
from services.kernels import GreenKernelODE  # noqa: E402
from services.linalg import NormKind  # noqa: E402

SCENARIO_DIR = REPO_ROOT / "scenarios"
SCHRODINGER_C = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))


def example_kernel(norm: NormKind) -> GreenKernelODE:
    return GreenKernelODE(EXAMPLE_MATRIX, PeriodicitySpec(omega=EXAMPLE_OMEGA, c=EXAMPLE_C, norm=norm))


@pytest.fixture(scope="session")
def l2_kernel() -> GreenKernelODE:
    return example_kernel(NormKind.L2)


@pytest.fixture(scope="session")
def l1_kernel() -> GreenKernelODE:
    return example_kernel(NormKind.L1)


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIO_DIR
