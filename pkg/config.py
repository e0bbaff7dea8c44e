# config.py
"""
Runtime configuration for qroute
Reads overrides from the environment (and a local .env file) and holds the
model constants shared by every module
"""
import os

from dotenv import load_dotenv

from log_config import get_logger

load_dotenv()

logger = get_logger("config")

# === Fidelity model ===

FIDELITY_FLOOR = 0.5
FIDELITY_CLAMP = (0.5, 0.99)
DEFAULT_FIDELITY_MEAN = 0.8
DEFAULT_FIDELITY_STDDEV = 0.1

# === Waxman generator defaults ===

DEFAULT_KAPPA = 0.8
DEFAULT_GAMMA = 0.5
DEFAULT_AREA_SIDE_KM = 2000.0
WAXMAN_MAX_ATTEMPTS = 100

# === Search and enumeration limits ===

DEFAULT_PATH_LIMIT = 64
# Node expansions allowed while enumerating one hop class
DEFAULT_SCAN_BUDGET = 20_000
BRUTE_FORCE_GUARD = 10 ** 6
CRITICAL_FIDELITY_TOLERANCE = 1e-6

# Recorded in experiment metadata only; no metric depends on it.
TIMESTEP_MS = 500

DEFAULT_TOPOLOGY_PATH = "data/us_backbone.txt"
DEFAULT_RESULTS_DIR = "./results"


def _int_from_env(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer, using {default}")
        return default
    if value < minimum:
        logger.warning(f"Ignoring {name}={value}: must be >= {minimum}, using {default}")
        return default
    return value


def get_thread_count() -> int:
    """Worker processes for trial execution (QROUTE_THREADS, 1 = serial)"""
    return _int_from_env("QROUTE_THREADS", 1)


def get_path_limit() -> int:
    """Per-hop-class path enumeration limit (QROUTE_PATH_LIMIT)"""
    return _int_from_env("QROUTE_PATH_LIMIT", DEFAULT_PATH_LIMIT)


def get_log_level() -> str:
    return os.getenv("QROUTE_LOG_LEVEL", "INFO").upper()


def get_results_dir() -> str:
    """
    Directory for sweep and bench outputs when no explicit path is given
    Creates it if it doesn't exist
    """
    results_dir = os.getenv("QROUTE_RESULTS_DIR", DEFAULT_RESULTS_DIR)
    os.makedirs(results_dir, exist_ok=True)
    return os.path.abspath(results_dir)


def get_default_topology_path() -> str:
    return os.getenv("QROUTE_TOPOLOGY", DEFAULT_TOPOLOGY_PATH)
