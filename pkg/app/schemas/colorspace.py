import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ChromaticityMode(str, Enum):
    """How received RGB is projected onto the (x, y) plane"""
    tristimulus = "tristimulus"  # the 2x3 matrix product as printed, no normalization
    normalized = "normalized"    # X/(X+Y+Z), Y/(X+Y+Z)


class RgbIntensity(BaseModel):
    """Linear normalized RGB drive level or sensor reading"""
    model_config = ConfigDict(frozen=True)

    r: float = Field(ge=0.0, le=1.0)
    g: float = Field(ge=0.0, le=1.0)
    b: float = Field(ge=0.0, le=1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "RgbIntensity":
        r, g, b = (float(v) for v in values)
        return cls(r=r, g=g, b=b)


class ChromaticityPoint(BaseModel):
    """Coordinate on the CIE 1931 plane"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float

    @field_validator('x', 'y')
    @classmethod
    def must_be_finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("chromaticity coordinates must be finite")
        return v

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "ChromaticityPoint":
        x, y = (float(v) for v in values)
        return cls(x=x, y=y)
