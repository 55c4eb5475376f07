from pathlib import Path
from typing import List, Union

from pydantic import field_validator
from pydantic_settings import BaseSettings

APP_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    EXPERIMENT_LOG_DIR: str = "logs"
    LOG_EXPERIMENT_EVENTS: bool = True

    # Output locations
    RESULTS_DIR: str = "results"

    # LDPC code tables shipped with the package
    LDPC_TABLE_DIR: str = str(APP_DIR / "data" / "ldpc" / "synthetic")
    SMALL_CODE_DIR: str = str(APP_DIR / "data" / "ldpc" / "small")

    # Experiment defaults (overridden by experiment config files and CLI flags)
    DEFAULT_PROFILE: str = "desk"
    DEFAULT_WORKERS: int = 1
    DEFAULT_SEED: int = 20220

    # HTTP surface
    ALLOWED_ORIGINS: Union[List[str], str] = ["http://localhost:3000", "http://localhost:5173"]
    MAX_SWEEP_POINTS: int = 256  # largest grid accepted over HTTP

    @field_validator('ALLOWED_ORIGINS', mode='before')
    @classmethod
    def parse_cors_origins(cls, v):
        if isinstance(v, str):
            return [origin.strip() for origin in v.split(',')]
        return v

    @field_validator('DEFAULT_PROFILE')
    @classmethod
    def check_profile(cls, v):
        if v not in ("desk", "paper"):
            raise ValueError(f"DEFAULT_PROFILE must be 'desk' or 'paper', got {v!r}")
        return v

    class Config:
        env_file = ".env"
        extra = "ignore"  # Ignore extra environment variables


settings = Settings()
