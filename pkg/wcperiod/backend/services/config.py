"""Runtime defaults, each overridable through the environment."""

import os
from pathlib import Path

BACKEND_DIR = Path(__file__).resolve().parent.parent


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, str(default)))


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


# distances to resonance below this count as resonant
MARGIN_TOL = _env_float("WCPERIOD_MARGIN_TOL", 1e-8)

QUAD_PANELS = _env_int("WCPERIOD_QUAD_PANELS", 16)
QUAD_NODES = _env_int("WCPERIOD_QUAD_NODES", 8)
T_SAMPLES = _env_int("WCPERIOD_T_SAMPLES", 129)
QUAD_MAX_DEPTH = _env_int("WCPERIOD_QUAD_MAX_DEPTH", 24)
QUAD_ABS_TOL = _env_float("WCPERIOD_QUAD_ABS_TOL", 1e-13)

PICARD_TOL = _env_float("WCPERIOD_PICARD_TOL", 1e-10)
PICARD_MAX_ITER = _env_int("WCPERIOD_PICARD_MAX_ITER", 200)
GRID_SIZE = _env_int("WCPERIOD_GRID_SIZE", 257)

C1_SAMPLES = _env_int("WCPERIOD_C1_SAMPLES", 512)
SAMPLE_SEED = _env_int("WCPERIOD_SAMPLE_SEED", 20240521)

# strict inequalities are decided with this slack; exact ties are "boundary case"
VERDICT_SLACK = 1e-12

LOG_LEVEL = os.getenv("WCPERIOD_LOG_LEVEL", "WARNING")

DB_PATH = BACKEND_DIR / "wcperiod.db"
DATABASE_URL = os.getenv("WCPERIOD_DB_URL", f"sqlite:///{DB_PATH}")
