# models/cube.py
# Pydantic models for hyperspectral cubes and the data derived from them

from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class CubeHeader(BaseModel):
    """Sidecar header of a raw band-sequential cube (`<name>.hdr.json`)"""
    model_config = ConfigDict(extra='forbid')

    width: int = Field(..., ge=1, description="Samples per line")
    height: int = Field(..., ge=1, description="Lines")
    bands: int = Field(..., ge=1, description="Spectral bands")
    dtype: Literal['f32'] = 'f32'
    interleave: Literal['bsq'] = 'bsq'
    byteorder: Literal['le'] = 'le'

    @property
    def pixels(self):
        return self.width * self.height

    @property
    def data_bytes(self):
        return self.pixels * self.bands * 4


class HyperCube(BaseModel):
    """
    N-pixel x M-band image volume.

    `data` has shape (bands, pixels) and is C-contiguous float32, so its
    flat buffer is band-major: value (pixel p, band b) sits at b*N + p.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    bands: int = Field(..., ge=1)
    data: np.ndarray

    @field_validator('data')
    @classmethod
    def float32_band_major(cls, v):
        if v.dtype != np.float32:
            raise ValueError(f'data must be float32, got {v.dtype}')
        if v.ndim != 2:
            raise ValueError(f'data must be 2-D (bands, pixels), got {v.ndim}-D')
        if not np.isfinite(v).all():
            first = int(np.flatnonzero(~np.isfinite(v.ravel()))[0])
            raise ValueError(f'data contains a non-finite value at flat index {first}')
        return np.ascontiguousarray(v)

    @model_validator(mode='after')
    def shape_matches(self):
        expected = (self.bands, self.width * self.height)
        if self.data.shape != expected:
            raise ValueError(f'data shape {self.data.shape} does not match (bands, width*height) = {expected}')
        return self

    @property
    def pixels(self):
        return self.width * self.height

    def band(self, b):
        return self.data[b]

    def value(self, pixel, band):
        return float(self.data[band, pixel])

    def header(self):
        return CubeHeader(width=self.width, height=self.height, bands=self.bands)

    @classmethod
    def from_pixel_major(cls, width, height, values):
        """Build from an (N, M) pixel-major array (one spectrum per row)."""
        values = np.asarray(values)
        return cls(
            width=width, height=height, bands=values.shape[1],
            data=np.ascontiguousarray(values.T, dtype=np.float32),
        )


class SignatureSet(BaseModel):
    """Library of endmember spectra, one row per material"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spectra: np.ndarray
    names: List[str]

    @field_validator('spectra')
    @classmethod
    def nonnegative_matrix(cls, v):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f'spectra must be a non-empty (count, bands) matrix, got shape {v.shape}')
        if not np.isfinite(v).all():
            raise ValueError('spectra must be finite')
        if (v < 0).any():
            row, col = np.argwhere(v < 0)[0]
            raise ValueError(f'spectrum {row} has a negative value at band {col}')
        return v

    @model_validator(mode='after')
    def names_match(self):
        if len(self.names) != self.spectra.shape[0]:
            raise ValueError(f'{len(self.names)} names for {self.spectra.shape[0]} spectra')
        return self

    @property
    def count(self):
        return self.spectra.shape[0]

    @property
    def bands(self):
        return self.spectra.shape[1]


class CenteredCube(BaseModel):
    """Cube with every band's mean removed, plus the removed means"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    cube: HyperCube
    band_means: np.ndarray

    @model_validator(mode='after')
    def one_mean_per_band(self):
        if self.band_means.shape != (self.cube.bands,):
            raise ValueError(f'band_means shape {self.band_means.shape} != ({self.cube.bands},)')
        return self

    @property
    def pixels(self):
        return self.cube.pixels

    @property
    def bands(self):
        return self.cube.bands

    def restored(self):
        """Original values (centered data plus band means) in float64."""
        return self.cube.data.astype(np.float64) + self.band_means[:, None]


class Projection(BaseModel):
    """Principal-component scores, component-major: scores[k, pixel]"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    scores: np.ndarray

    @field_validator('scores')
    @classmethod
    def finite_scores(cls, v):
        if v.ndim != 2:
            raise ValueError('scores must be 2-D (components, pixels)')
        if not np.isfinite(v).all():
            raise ValueError('scores must be finite')
        return v

    @model_validator(mode='after')
    def pixels_match(self):
        if self.scores.shape[1] != self.width * self.height:
            raise ValueError('scores pixel count does not match width*height')
        return self

    @property
    def components(self):
        return self.scores.shape[0]
