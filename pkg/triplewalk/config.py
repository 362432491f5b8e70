"""
Application configuration
"""
import sys
from pathlib import Path
from typing import Optional

from loguru import logger
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="TRIPLEWALK_", env_file=".env", extra="ignore")

    # Workers (1 = deterministic mode)
    threads: int = Field(default=1, ge=1)

    # Weighting
    weight_floor: float = Field(default=1e-4, gt=0.0, le=1.0)
    cfb_node_cap: int = Field(default=10_000, ge=3)

    # Line graph diagnostics
    hub_threshold: Optional[int] = Field(default=None, ge=1)

    # Logging
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    progress: bool = False


settings = Settings()

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}"


def configure_logging(log_level: Optional[str] = None, log_dir: Optional[Path] = None) -> None:
    """Install stderr and optional file sinks"""
    level = (log_level or settings.log_level).upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)

    directory = log_dir or (Path(settings.log_dir) if settings.log_dir else None)
    if directory is not None:
        directory.mkdir(parents=True, exist_ok=True)
        logger.add(directory / "pipeline.log", level=level, encoding="utf-8")
