# models/bench.py
# Pydantic models for benchmark timings, platform descriptors and reports

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

IO_NOTE = "stage timings exclude file I/O and host transfers"


class StageTimings(BaseModel):
    """
    Milliseconds per pipeline stage for one run.

    Stage times are None only for externally entered totals.
    """
    pcs: int = Field(..., ge=1, description="Principal components computed")
    stage1_ms: Optional[float] = Field(None, ge=0, description="Mean removal")
    stage2_ms: Optional[float] = Field(None, ge=0, description="Covariance")
    stage3_ms: Optional[float] = Field(None, ge=0, description="Jacobi eigendecomposition")
    stage4_ms: Optional[float] = Field(None, ge=0, description="Projection")
    total_ms: float = Field(..., gt=0)

    @property
    def stages(self):
        return [self.stage1_ms, self.stage2_ms, self.stage3_ms, self.stage4_ms]

    @model_validator(mode='after')
    def total_covers_stages(self):
        longest = max((s for s in self.stages if s is not None), default=0.0)
        if self.total_ms < longest:
            raise ValueError(f'total_ms ({self.total_ms}) is below the longest stage ({longest})')
        return self


class BenchRun(StageTimings):
    """One row of a report: timings plus figures of merit"""
    cps: float = Field(..., ge=0)
    cps_per_core_mhz: float = Field(..., ge=0)
    cps_per_mhz: float = Field(..., ge=0)
    sweeps_used: int = Field(0, ge=0)
    rotations_used: int = Field(0, ge=0)
    output_digest: Optional[str] = None
    speedup: Optional[float] = None
    source: Literal['measured', 'external'] = 'measured'


class PlatformDesc(BaseModel):
    """Hardware descriptor used to normalize CPS"""
    name: str = Field(..., min_length=1)
    cores: int = Field(..., ge=1)
    freq_mhz: float = Field(..., gt=0)
    # Published GPU figures normalize the 2-decimal CPS, not the raw one
    cps_decimals: Optional[int] = Field(None, ge=0, le=12)


class ImageDesc(BaseModel):
    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    bands: int = Field(..., ge=1)
    name: Optional[str] = None

    @property
    def label(self):
        if self.name:
            return self.name
        return f"{self.width} x {self.height} x {self.bands}"


class FlopEstimate(BaseModel):
    """Operation counts per stage; Python ints, so they never wrap"""
    mean_removal: int = Field(..., ge=0)
    covariance: int = Field(..., ge=0)
    eigen: int = Field(..., ge=0)
    projection: int = Field(..., ge=0)
    total: int = Field(..., ge=0)
    covariance_corrected: int = Field(..., ge=0, description="2*N*M^2 + M^2: arithmetic cost of X^T X")
    total_corrected: int = Field(..., ge=0)
    advisory: str = ""

    @model_validator(mode='after')
    def totals_are_sums(self):
        if self.total != self.mean_removal + self.covariance + self.eigen + self.projection:
            raise ValueError('total must equal the sum of the stage counts')
        if self.total_corrected != self.mean_removal + self.covariance_corrected + self.eigen + self.projection:
            raise ValueError('total_corrected must equal the sum with the corrected covariance count')
        return self


class BenchReport(BaseModel):
    """Report JSON: platform, image, runs (field order is the serialized order)"""
    platform: PlatformDesc
    image: ImageDesc
    runs: List[BenchRun] = Field(..., min_length=1)
    strategy: Optional[str] = None
    workers: Optional[int] = None
    mode: Optional[str] = None
    flops: Optional[FlopEstimate] = None
    notes: str = IO_NOTE
