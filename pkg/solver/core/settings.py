"""
Solver settings loaded from the environment (.env supported).

Usage:
    settings = load_settings()
    field = build_plane(model, settings.grid_n)
"""

import logging
import os
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional

from dotenv import find_dotenv, load_dotenv

from core.error_handler import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    """Numerical defaults shared by the library and the CLI"""

    # Grid
    grid_n: int = 2048                 # Nodes per turn, power of two >= 64

    # Tolerances
    tol: float = 1e-9                  # Eigenvalue bracket width
    ode_tol: float = 1e-12             # Local error per Runge-Kutta step
    parabolic_tol: float = 1e-7        # Band on |tr -/+ 2| treated as parabolic

    # Ladder / suites
    k_max: int = 8                     # Default ladder depth
    seed: int = 7                      # Default seed of the random suites
    workers: int = 1                   # Thread fan-out over k and trials

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_json: bool = False

    def __post_init__(self):
        if self.grid_n < 64 or self.grid_n & (self.grid_n - 1):
            raise ConfigError(
                message="Grid size must be a power of two >= 64",
                context={'grid_n': self.grid_n},
            )
        for name in ('tol', 'ode_tol', 'parabolic_tol'):
            if getattr(self, name) <= 0:
                raise ConfigError(
                    message=f"{name} must be positive",
                    context={name: getattr(self, name)},
                )
        if self.k_max < 2:
            raise ConfigError(message="k_max must be >= 2", context={'k_max': self.k_max})
        if self.workers < 1:
            raise ConfigError(message="workers must be >= 1", context={'workers': self.workers})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_ENV_FIELDS = {
    'grid_n': ('CYCLOID_GRID_N', int),
    'tol': ('CYCLOID_TOL', float),
    'ode_tol': ('CYCLOID_ODE_TOL', float),
    'parabolic_tol': ('CYCLOID_PARABOLIC_TOL', float),
    'k_max': ('CYCLOID_KMAX', int),
    'seed': ('CYCLOID_SEED', int),
    'workers': ('CYCLOID_WORKERS', int),
    'log_level': ('CYCLOID_LOG_LEVEL', str),
    'log_file': ('CYCLOID_LOG_FILE', str),
    'log_json': ('CYCLOID_LOG_JSON', bool),
}


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off', ''):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_settings(env_file: Optional[str] = None, **overrides) -> SolverSettings:
    """
    Build settings from environment variables, then apply explicit overrides.

    Args:
        env_file: Optional .env path (default: search from the working directory)
        **overrides: Field values that win over the environment (None is ignored)

    Returns:
        SolverSettings

    Raises:
        ConfigError: a variable is set but does not parse
    """
    load_dotenv(env_file or find_dotenv(usecwd=True))

    values: Dict[str, Any] = {}
    for name, (var, kind) in _ENV_FIELDS.items():
        raw = os.getenv(var)
        if raw is None or raw == '':
            continue
        try:
            values[name] = _parse_bool(raw) if kind is bool else kind(raw)
        except ValueError as e:
            raise ConfigError(
                message=f"Could not parse {var}",
                context={'value': raw, 'expected': kind.__name__},
                original_error=e,
            ) from e

    values.update({k: v for k, v in overrides.items() if v is not None})
    settings = SolverSettings(**values)
    logger.debug(f"Settings: {settings.to_dict()}")
    return settings
