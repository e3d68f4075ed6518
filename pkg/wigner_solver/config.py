from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache


class Settings(BaseSettings):
    """Process-level settings for the solver and its CLI."""

    model_config = SettingsConfigDict(
        env_prefix="WIGNER_",
        env_file=".env",
        env_file_encoding="utf-8",
    )

    # App settings
    app_name: str = "Wigner Semi-Spectral Solver"
    debug: bool = False
    log_level: str = "INFO"

    # Output settings
    output_dir: str = "./runs"
    float_format: str = "%.17g"

    # Run ledger
    database_url: str = "sqlite:///./wigner_runs.db"
    record_runs: bool = True

    # Time stepping
    default_courant: float = 0.9  # target |lambda|max * dt / dx
    nan_check_every: int = 1  # steps between finiteness checks


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
