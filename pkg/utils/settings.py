"""
Environment-driven defaults for the toolkit
"""

import logging
import os
from typing import Any, Dict, List, Tuple

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

DEFAULT_SETTINGS: Dict[str, Any] = {
    'pattern_cap': 2 ** 24,
    'seed': 0,
    'log_level': 'WARNING',
    'solver_max_iter': 10_000,
    'tail_fraction': 0.25,
    'workers': 1,
}

_ENV_VARS = {
    'pattern_cap': ('AMENABLE_PATTERN_CAP', int),
    'seed': ('AMENABLE_SEED', int),
    'log_level': ('AMENABLE_LOG_LEVEL', str),
    'solver_max_iter': ('AMENABLE_SOLVER_MAX_ITER', int),
    'tail_fraction': ('AMENABLE_TAIL_FRACTION', float),
    'workers': ('AMENABLE_WORKERS', int),
}

logger = logging.getLogger(__name__)


def get_settings() -> Tuple[Dict[str, Any], List[str]]:
    """
    Read toolkit defaults from the environment

    Returns:
        Tuple of (settings, problems) where problems lists malformed variables.
        Malformed values fall back to the defaults.
    """
    settings = dict(DEFAULT_SETTINGS)
    problems = []

    for key, (var, cast) in _ENV_VARS.items():
        raw = os.getenv(var)
        if raw is None or raw.strip() == '':
            continue
        try:
            value = cast(raw.strip())
        except ValueError:
            problems.append(f"{var}={raw!r} is not a valid {cast.__name__}")
            continue
        if key in ('pattern_cap', 'solver_max_iter', 'workers') and value <= 0:
            problems.append(f"{var} must be positive, got {value}")
            continue
        if key == 'tail_fraction' and not 0.0 < value <= 1.0:
            problems.append(f"{var} must lie in (0, 1], got {value}")
            continue
        settings[key] = value

    for problem in problems:
        logger.warning("Ignoring environment setting: %s", problem)

    return settings, problems


def setting(key: str) -> Any:
    """Return a single setting value"""
    settings, _ = get_settings()
    return settings[key]


def configure_logging(level: str = None) -> None:
    """Configure the root logger once for command line runs"""
    if level is None:
        level = setting('log_level')
    numeric = getattr(logging, str(level).upper(), logging.WARNING)
    logging.basicConfig(
        level=numeric,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    logging.getLogger().setLevel(numeric)
