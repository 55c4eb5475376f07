from enum import Enum
from typing import List

from pydantic import BaseModel, Field, field_validator


class OptimizerType(str, Enum):
    sgd = "sgd"
    adam = "adam"


class Activation(str, Enum):
    relu = "relu"
    tanh = "tanh"


class TrainingConfig(BaseModel):
    sample_count: int = Field(default=15000, ge=1)
    epochs: int = Field(default=5000, ge=1)
    batch_size: int = Field(default=4096, ge=1)  # larger than sample_count means full batch
    learning_rate: float = Field(default=1e-3, gt=0.0)
    optimizer: OptimizerType = OptimizerType.adam
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    seed: int = 0


class EqualizerArch(BaseModel):
    n_units: int = Field(default=256, ge=1)
    n_hidden: int = Field(default=5, ge=1, le=6)
    activation: Activation = Activation.relu


class EqualizerSweep(BaseModel):
    """Architecture grid for the uncoded sweep"""
    n_units: List[int] = Field(default_factory=lambda: [256])
    n_hidden: List[int] = Field(default_factory=lambda: [5])
    activation: Activation = Activation.relu

    @field_validator('n_units', 'n_hidden')
    @classmethod
    def nonempty(cls, v):
        if not v:
            raise ValueError("architecture sweep lists must be nonempty")
        if any(x < 1 for x in v):
            raise ValueError("architecture sizes must be positive")
        return v

    @field_validator('n_hidden')
    @classmethod
    def supported_depth(cls, v):
        if any(x > 6 for x in v):
            raise ValueError("at most 6 hidden layers are supported")
        return v

    def grid(self) -> List[EqualizerArch]:
        return [
            EqualizerArch(n_units=u, n_hidden=h, activation=self.activation)
            for h in self.n_hidden
            for u in self.n_units
        ]
