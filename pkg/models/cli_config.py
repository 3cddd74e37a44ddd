# models/cli_config.py
# Validated CLI settings, built from the merged defaults/env/config/flags dict

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CliConfig(BaseModel):
    """Shared settings every subcommand runs with"""
    model_config = ConfigDict(extra='forbid')

    workers: int = Field(..., ge=1, le=1024, description="Worker threads")
    mode: Literal['deterministic', 'fast'] = 'deterministic'
    epsilon: float = Field(1e-10, gt=0, lt=1, description="Jacobi stop factor (relative)")
    max_sweeps: int = Field(50, ge=1, le=10000)
    seed: int = Field(1, ge=0)
    chunk: int = Field(16384, ge=1)
    precision: Literal['double', 'single'] = 'double'
    log_level: str = 'WARNING'

    @field_validator('mode', 'precision', mode='before')
    @classmethod
    def lowercase(cls, v):
        return v.strip().lower() if isinstance(v, str) else v

    @field_validator('log_level')
    @classmethod
    def known_level(cls, v):
        level = str(v).strip().upper()
        if level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(f'unknown log level {v!r}')
        return level
