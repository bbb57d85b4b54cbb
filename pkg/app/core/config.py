"""
Centralized configuration for the Pareto MCTS toolkit.

Defines the Settings class for process-wide options: API identity, logging, output location,
CSV formatting and worker parallelism. Mission-level options live in app.schemas.mission.
"""
from typing import Optional
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process settings, loaded from environment variables or a `.env` file.
    """
    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")

    # API Settings
    API_V1_STR: str = "/api/v1"
    SERVER_NAME: str = "Pareto MCTS Planner"
    SERVER_HOST: str = "127.0.0.1"
    SERVER_PORT: int = 8000

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: Optional[Path] = None

    # Experiments
    OUTPUT_DIR: Path = Path("runs")
    N_JOBS: int = 1
    CSV_FLOAT_FORMAT: str = "%.10g"

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """
        Upper-case and validate the log level name.

        Args:
            v (str): Level name from the environment.
        Returns:
            str: Canonical level name.
        """
        level = str(v).upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {v!r}")
        return level

    @field_validator("N_JOBS")
    @classmethod
    def validate_n_jobs(cls, v: int) -> int:
        if v == 0:
            raise ValueError("N_JOBS must be non-zero (use -1 for all cores)")
        return v


settings = Settings()
