"""
Configuration settings for the Fourier filter bank trainer
"""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables (NFFB_*)"""

    model_config = SettingsConfigDict(
        env_prefix="NFFB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Service
    service_name: str = "fourier-filter-bank"
    service_version: str = "1.0.0"
    log_level: str = "INFO"
    log_format: Literal["text", "json"] = "text"

    # Workers
    threads: int = Field(
        default=1,
        ge=1,
        description="Upper bound on gradient workers (NFFB_THREADS)",
    )
    chunk_size: int = Field(
        default=8192,
        ge=1,
        description="Rows per forward/backward chunk; bounds peak memory of one batch",
    )

    # Outputs
    output_dir: str = "./runs"
    metrics_filename: str = "metrics.csv"
    checkpoint_filename: str = "model.ckpt"


# Global settings instance
settings = Settings()
