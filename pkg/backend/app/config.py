from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    # Application Settings
    APP_NAME: str = "olat"
    APP_ENV: str = "development"
    LOG_LEVEL: str = "INFO"
    TOOL_VERSION: str = "0.1.0"
    REPORT_SCHEMA: str = "olat-report/1"

    # Budgets
    DEFAULT_DEPTH: int = 8
    DEFAULT_SAMPLES: int = 100_000
    DEFAULT_LINES: int = 64
    DEFAULT_SEED: int = 0
    RETRY_ATTEMPTS: int = 1
    # retries double the depth up to this cap
    MAX_REFINE_DEPTH: int = 10

    # Inner subdivision budgets for projections
    PROJECTION_DEPTH: int = 4
    WITNESS_DEPTH: int = 6
    PROJECTION_SLICE_SAMPLES: int = 64
    ALIGNED_LINES_CAP: int = 512
    VPRIME_SAMPLES: int = 20_000

    # Lattice enumeration guard
    MINIMA_MAX_DIM: int = 6

    # Certified constants
    PI_DIGITS: int = 60
    SQRT_BITS: int = 64

    # 0 means "use m + n of the family"
    FORMAT_BOUND: int = 0

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


@lru_cache
def get_settings() -> Settings:
    return Settings()
