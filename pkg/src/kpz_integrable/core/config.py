import os
import logging
from pathlib import Path

DEFAULT_SEED = 0
CSV_SIGNIFICANT_DIGITS = 15
DEFAULT_CIRCLE_NODES = 64
DEFAULT_LINE_HEIGHT = 40.0
AIRY_DOMAIN_SCALE = 4.0
CONVERGENCE_TOLERANCE = 1e-6
# gRSK switches to log-domain above this many rows or columns
LOG_DOMAIN_THRESHOLD = 8
BRUTE_FORCE_MAX_CELLS = 30

LOG_ENV_VAR = "KPZ_LOG"
SLOW_TESTS_ENV_VAR = "KPZ_SLOW_TESTS"


def get_project_root() -> Path:
    """Find the project root directory by locating pyproject.toml.

    Falls back to the current working directory when no pyproject.toml is
    found, so an installed package can still be imported from anywhere.

    Returns:
        Path: Absolute path to project root directory.
    """
    current_dir = Path(os.getcwd()).absolute()

    for parent in [current_dir, *current_dir.parents]:
        if (parent / "pyproject.toml").exists():
            return parent

    return current_dir


ROOT_DIR = get_project_root()


def log_level_from_env(default: int = logging.WARNING) -> int:
    """Logging level named by KPZ_LOG (DEBUG, INFO, WARNING, ERROR)."""
    name = os.environ.get(LOG_ENV_VAR, "").strip().upper()
    if not name:
        return default
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else default


def schema_path() -> Path:
    """Path of the shipped JSON schema for trajectory artifacts."""
    return Path(__file__).resolve().parent.parent / "schemas" / "trajectory.schema.json"
