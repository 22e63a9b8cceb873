from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class IsobemSettings(BaseSettings):
    """Process-level knobs, read from ISOBEM_* environment variables"""

    model_config = SettingsConfigDict(env_prefix="ISOBEM_", extra="ignore")

    log_level: str = "INFO"
    log_file: Optional[str] = None
    # threads for near-field quadrature and estimator maps
    workers: int = Field(default=4, ge=1)
    # evaluation points per vectorised far-field block
    chunk_size: int = Field(default=128, ge=1)


@lru_cache(maxsize=1)
def get_settings() -> IsobemSettings:
    return IsobemSettings()
