"""Configuration management for sweepcert."""

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import DEFAULT_BLOCK_SIZE, DEFAULT_FD_STEP


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables.

    Experiment parameters live in the experiment document; these settings only
    control where reports go and how work is spread over threads.
    """

    # Output
    output_dir: Optional[str] = None  # overrides the config's output.directory

    # Execution
    workers: int = Field(1, ge=1, le=256)
    block_size: int = Field(DEFAULT_BLOCK_SIZE, ge=1)
    fd_step: float = Field(DEFAULT_FD_STEP, gt=0)

    # Development
    debug: bool = False
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="SWEEPCERT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

