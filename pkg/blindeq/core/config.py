from functools import lru_cache
from pathlib import Path

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings with validation."""

    model_config = SettingsConfigDict(
        env_prefix="BLINDEQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    APP_NAME: str = "blindeq"
    DEBUG: bool = False
    ENVIRONMENT: str = Field(default="development", pattern="^(development|ci|production)$")

    # Logging
    LOG_LEVEL: str = Field(default="INFO", pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$")
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Execution
    THREADS: int = Field(default=1, ge=1)
    FFT_WORKERS: int = Field(default=1, ge=1)
    PROFILE: str = Field(default="desk", pattern="^(desk|paper)$")

    # Artifacts
    OUTPUT_DIR: Path = Path("results")
    PLOTS: bool = True

    # Evaluation frame sizing
    EVAL_TARGET_ERRORS: int = Field(default=100, ge=1)
    EVAL_MAX_SYMBOLS: int = Field(default=10_000_000, ge=1024)
    EVAL_CHUNK_SYMBOLS: int = Field(default=1 << 17, ge=1024)
    TRACE_EVAL_SYMBOLS: int = Field(default=1 << 14, ge=256)

    @model_validator(mode="after")
    def validate_settings(self) -> "Settings":
        """Validate settings after all fields are set."""
        if self.ENVIRONMENT == "production" and self.DEBUG:
            raise ValueError("DEBUG must be False in production environment")
        if self.THREADS == 1 and self.FFT_WORKERS > 1:
            raise ValueError("FFT_WORKERS > 1 breaks deterministic single-thread mode")
        if self.EVAL_CHUNK_SYMBOLS > self.EVAL_MAX_SYMBOLS:
            raise ValueError("EVAL_CHUNK_SYMBOLS must not exceed EVAL_MAX_SYMBOLS")
        return self


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
