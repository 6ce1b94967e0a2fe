"""
Uses Pydantic settings to load configuration from environment variables
(prefixed ``GWTREES_``) or a ``.env`` file, with defaults suited to a
single workstation.
"""
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library and CLI settings loaded from environment variables."""

    # Reproducibility
    seed: int = 20081217

    # Sampler limits
    rejection_cap: int = 1_000_000
    size_cap: int = 10_000_000
    batch_size: int = 4096

    # Statistic caps and guards
    lcap: int = 64
    mcap: int = 64
    enumeration_max_n: int = 12
    bruteforce_max_n: int = 2000
    # cells across the four cached coefficient tables of one law
    table_max_cells: int = 20_000_000

    # Numerical tolerances
    criticality_tol: float = 1e-9
    normalization_tol: float = 1e-12
    tail_mass_tol: float = 1e-16

    # Output
    output_format: Literal["csv", "json"] = "csv"
    log_level: str = "WARNING"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="GWTREES_",
        case_sensitive=False,
        extra="ignore"
    )


# Global settings instance
settings = Settings()
