"""Application settings loaded from environment variables.

Values come from the process environment or a ``.env`` file; command-line
flags override them.
"""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Typed configuration for the checker and the benchmark runner."""

    loop_bound: int = Field(1, ge=1, alias="GAPCHECK_LOOP_BOUND")
    timeout_secs: float = Field(7200.0, gt=0, alias="GAPCHECK_TIMEOUT_SECS")
    output_format: Literal["human", "json-lines", "csv"] = Field(
        "human", alias="GAPCHECK_FORMAT"
    )

    # Logging
    log_level: str = Field("INFO", alias="GAPCHECK_LOG_LEVEL")
    log_dir: str | None = Field(None, alias="GAPCHECK_LOG_DIR")

    # Benchmarks
    bench_reps: int = Field(3, ge=1, alias="GAPCHECK_BENCH_REPS")
    bench_workers: int = Field(1, ge=1, alias="GAPCHECK_BENCH_WORKERS")

    model_config = {
        "env_file": ".env",
        "case_sensitive": True,
        "extra": "ignore",
        "populate_by_name": True,
    }


settings = Settings()  # type: ignore
