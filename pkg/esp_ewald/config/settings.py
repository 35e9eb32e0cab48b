"""Configuration settings for the ESP Ewald library and benchmark CLI."""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

FAMILIES = ("pswf", "gaussian")
FORCE_METHODS = ("ad", "ik")


@dataclass
class Settings:
    """Run defaults loaded from environment variables."""

    # Method
    family: str = "pswf"
    eps: float = 1e-4
    r_c: float = 1.0
    force_method: str = "ad"

    # Classical baseline
    gaussian_order: int = 5

    # Execution
    threads: int = 1
    deterministic: bool = False

    # Output
    out_dir: str = "results"
    bench_repeats: int = 5
    log_level: str = "INFO"

    @classmethod
    def _get_env(cls, key: str, default: str = "") -> str:
        """Get a value from the environment."""
        return os.getenv(key, default)

    @classmethod
    def load(cls, env_path: Optional[Path] = None) -> "Settings":
        """Load settings from a .env file and environment variables."""
        if env_path:
            load_dotenv(env_path)
        else:
            load_dotenv()

        return cls(
            family=cls._get_env("ESP_FAMILY", "pswf").lower(),
            eps=float(cls._get_env("ESP_EPS", "1e-4")),
            r_c=float(cls._get_env("ESP_RC", "1.0")),
            force_method=cls._get_env("ESP_FORCE_METHOD", "ad").lower(),
            gaussian_order=int(cls._get_env("ESP_GAUSSIAN_ORDER", "5")),
            threads=int(cls._get_env("ESP_THREADS", "1")),
            deterministic=cls._get_env("ESP_DETERMINISTIC", "false").lower() in ("1", "true", "yes"),
            out_dir=cls._get_env("ESP_OUT_DIR", "results"),
            bench_repeats=int(cls._get_env("ESP_BENCH_REPEATS", "5")),
            log_level=cls._get_env("ESP_LOG_LEVEL", "INFO").upper(),
        )

    def validate(self) -> list[str]:
        """Validate settings and return list of errors."""
        errors = []

        if self.family not in FAMILIES:
            errors.append(f"ESP_FAMILY must be one of {FAMILIES}, got {self.family!r}")
        if self.force_method not in FORCE_METHODS:
            errors.append(f"ESP_FORCE_METHOD must be one of {FORCE_METHODS}, got {self.force_method!r}")
        if not EPS_SOLVE_RANGE[0] <= self.eps <= EPS_SOLVE_RANGE[1]:
            errors.append(f"ESP_EPS must lie in {EPS_SOLVE_RANGE}, got {self.eps}")
        if self.r_c <= 0:
            errors.append("ESP_RC must be positive")
        if not ORDER_RANGE[0] <= self.gaussian_order <= ORDER_RANGE[1]:
            errors.append(f"ESP_GAUSSIAN_ORDER must lie in {list(ORDER_RANGE)}, got {self.gaussian_order}")
        if self.threads < 1:
            errors.append("ESP_THREADS must be at least 1")
        if self.bench_repeats < 1:
            errors.append("ESP_BENCH_REPEATS must be at least 1")

        return errors


# Default settings instance
settings = Settings.load()


# Published optimal parameters, keyed by target precision:
# (alpha_G, c_pswf, P_esp, R_default)
OPTIMAL_PARAMETERS = {
    1e-3: (6.9078, 9.5392, 5, 5.78),
    5e-4: (7.6009, 10.290, 5, 7.71),
    1e-4: (9.2103, 12.024, 6, 14.32),
    5e-5: (9.9035, 12.762, 7, 22.42),
    1e-5: (11.5129, 14.471, 8, 54.57),
}

# Precision range covered by the P table (overrides may leave it)
EPS_TABLE_RANGE = (1e-5, 1e-3)

# Precision range accepted by the prolate shape solver
EPS_SOLVE_RANGE = (1e-8, 1e-2)

# Window order range
ORDER_RANGE = (3, 16)

# Default spreading order of the classical baseline (LAMMPS/GROMACS MPI default)
DEFAULT_GAUSSIAN_ORDER = 5

# Rock-salt Madelung constant (nearest-neighbour normalization)
MADELUNG_ROCKSALT = 1.747565
