# models/linalg.py
# Pydantic models for the symmetric-matrix side of the pipeline (covariance, Jacobi)

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils.errors import SymmetryError


class SymMatrix(BaseModel):
    """M x M symmetric matrix; construction rejects any asymmetry"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    entries: np.ndarray

    @field_validator('entries')
    @classmethod
    def square_and_symmetric(cls, v):
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValueError(f'entries must be a non-empty square matrix, got shape {v.shape}')
        if v.dtype not in (np.float32, np.float64):
            raise ValueError(f'entries must be float32 or float64, got {v.dtype}')
        if not np.isfinite(v).all():
            raise ValueError('entries must be finite')
        if not np.array_equal(v, v.T):
            i, j, gap = worst_asymmetry(v)
            raise SymmetryError(i, j, gap)
        return v

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def from_upper(cls, a):
        """Mirror the upper triangle onto the lower one."""
        a = np.asarray(a)
        return cls(entries=np.triu(a) + np.triu(a, 1).T)

    @classmethod
    def from_array(cls, a, rtol=1e-12, dtype=np.float64):
        """
        Accept a nearly symmetric array.

        Gaps up to rtol * max|a| are treated as rounding and the upper triangle
        wins; larger gaps raise SymmetryError naming the worst (i, j) pair.
        """
        a = np.asarray(a, dtype=dtype)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f'matrix must be square, got shape {a.shape}')
        i, j, gap = worst_asymmetry(a)
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        if gap > rtol * max(scale, 1e-300):
            raise SymmetryError(i, j, gap)
        return cls.from_upper(a)


def worst_asymmetry(a):
    """Return (i, j, |a_ij - a_ji|) for the largest gap, i < j."""
    gap = np.abs(a - a.T)
    flat = int(np.argmax(np.triu(gap, 1)))
    i, j = divmod(flat, a.shape[0])
    return i, j, float(gap[i, j])


class JacobiConfig(BaseModel):
    """Pivot strategy and stopping rule for the Jacobi eigensolver"""
    strategy: Literal['classical', 'cyclic', 'parallel'] = 'cyclic'
    epsilon_rel: float = Field(1e-10, gt=0, description="Stop factor relative to max initial |off-diagonal|")
    max_sweeps: int = Field(50, ge=1)
    record_history: bool = False
    precision: Literal['double', 'single'] = 'double'
    normalize_signs: bool = False


class RotationParams(BaseModel):
    """Plane rotation zeroing entry (i, j): m, t = tan(alpha), cos(alpha), sin(alpha)"""
    i: int = Field(..., ge=0)
    j: int = Field(..., ge=1)
    m: float
    t: float
    cos_a: float
    sin_a: float

    @model_validator(mode='after')
    def valid_rotation(self):
        if self.i >= self.j:
            raise ValueError(f'rotation needs i < j, got ({self.i}, {self.j})')
        if abs(self.cos_a ** 2 + self.sin_a ** 2 - 1.0) > 1e-12:
            raise ValueError('cos^2 + sin^2 must equal 1')
        if abs(self.t) > 1.0:
            raise ValueError(f'|t| must not exceed 1, got {self.t}')
        return self


class SweepRecord(BaseModel):
    sweep: int
    offdiag_norm: float
    rotations: int


class EigenDecomposition(BaseModel):
    """Descending eigenvalues; column k of `eigenvectors` belongs to eigenvalue k"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps_used: int = Field(0, ge=0)
    rotations_used: int = Field(0, ge=0)
    strategy: str = 'cyclic'
    history: Optional[List[SweepRecord]] = None

    @model_validator(mode='after')
    def descending_and_square(self):
        m = self.eigenvalues.shape[0]
        if self.eigenvectors.shape != (m, m):
            raise ValueError(f'eigenvectors shape {self.eigenvectors.shape} != ({m}, {m})')
        if m > 1 and (np.diff(self.eigenvalues) > 0).any():
            raise ValueError('eigenvalues must be sorted in descending order')
        return self

    @property
    def dim(self):
        return self.eigenvalues.shape[0]
