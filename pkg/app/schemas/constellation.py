from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ConstellationSpec(BaseModel):
    order: int = 512
    steps: int = 100

    @field_validator('order')
    @classmethod
    def power_of_two(cls, v):
        if v < 4 or v & (v - 1):
            raise ValueError(f"constellation order must be a power of two >= 4, got {v}")
        return v

    @field_validator('steps')
    @classmethod
    def enough_steps(cls, v):
        if v < 2:
            raise ValueError("steps must be at least 2")
        return v


class SymbolBits(BaseModel):
    """Bit label of one symbol, most-significant bit first"""
    model_config = ConfigDict(frozen=True)

    bits: List[int] = Field(min_length=1)

    @field_validator('bits')
    @classmethod
    def binary_only(cls, v):
        if any(b not in (0, 1) for b in v):
            raise ValueError("symbol bits must be 0 or 1")
        return v

    @property
    def value(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    @classmethod
    def from_index(cls, index: int, width: int) -> "SymbolBits":
        return cls(bits=[(index >> (width - 1 - i)) & 1 for i in range(width)])


class ConstellationEntry(BaseModel):
    symbol_index: int
    bits: str
    r: float
    g: float
    b: float
    x: float
    y: float


class ConstellationTable(BaseModel):
    order: int
    bits_per_symbol: int
    steps: int
    min_distance: float
    entries: List[ConstellationEntry]
