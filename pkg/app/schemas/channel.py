from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_CROSSTALK = [
    [0.80, 0.15, 0.05],
    [0.10, 0.80, 0.10],
    [0.02, 0.12, 0.86],
]


def _check_crosstalk(matrix: List[List[float]]) -> List[List[float]]:
    if len(matrix) != 3 or any(len(row) != 3 for row in matrix):
        raise ValueError("crosstalk must be a 3x3 matrix")
    if not np.all(np.isfinite(np.asarray(matrix, dtype=np.float64))):
        raise ValueError("crosstalk entries must be finite")
    for i, row in enumerate(matrix):
        if any(v < 0 for v in row):
            raise ValueError("crosstalk gains must be nonnegative")
        if sum(row) > 1.2 + 1e-12:
            raise ValueError(f"crosstalk row {i} sums to {sum(row):.3f} > 1.2")
        off_diagonal = sum(v for j, v in enumerate(row) if j != i)
        if row[i] <= off_diagonal:
            raise ValueError(f"crosstalk row {i} is not strictly diagonally dominant")
    return matrix


class ChannelSettings(BaseModel):
    """Channel template shared by every point of a sweep; led_count is filled per point"""
    crosstalk: List[List[float]] = Field(default_factory=lambda: [row[:] for row in DEFAULT_CROSSTALK])
    nonlinearity_gamma: float = Field(default=1.3, gt=0.0)
    noise_sigma0: float = Field(default=0.05, ge=0.0)
    adc_bits: int = Field(default=12, ge=8, le=16)

    @field_validator('crosstalk')
    @classmethod
    def valid_crosstalk(cls, v):
        return _check_crosstalk(v)


class ChannelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    crosstalk: List[List[float]] = Field(default_factory=lambda: [row[:] for row in DEFAULT_CROSSTALK])
    nonlinearity_gamma: float = Field(default=1.3, gt=0.0)
    noise_sigma0: float = Field(default=0.05, ge=0.0)
    led_count: int = Field(default=1, ge=1, le=64)
    adc_bits: int = Field(default=12, ge=8, le=16)
    seed: int = 0

    @field_validator('crosstalk')
    @classmethod
    def valid_crosstalk(cls, v):
        return _check_crosstalk(v)

    @property
    def crosstalk_matrix(self) -> np.ndarray:
        return np.asarray(self.crosstalk, dtype=np.float64)

    @property
    def noise_sigma(self) -> float:
        return self.noise_sigma0 / float(np.sqrt(self.led_count))

    @classmethod
    def identity(cls, led_count: int = 1, adc_bits: int = 12, seed: int = 0) -> "ChannelParams":
        """Impairment-free channel: only the ADC quantizer remains"""
        return cls(
            crosstalk=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            nonlinearity_gamma=1.0,
            noise_sigma0=0.0,
            led_count=led_count,
            adc_bits=adc_bits,
            seed=seed,
        )
