from functools import lru_cache
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="WINDCAST_", extra="ignore")

    # Logging
    log_level: str = "INFO"

    # Output
    output_dir: Path = Path("out")
    float_precision: int = 6

    # Experiments
    master_seed: int = 42
    max_workers: int = 1

    # Turbine parameters file (JSON or TOML); embedded defaults when unset
    turbine_config: Optional[Path] = None


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Settings are read once per process."""
    return Settings()
