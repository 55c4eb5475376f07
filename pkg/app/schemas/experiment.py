import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .channel import ChannelParams, ChannelSettings
from .colorspace import ChromaticityMode
from .constellation import ConstellationSpec
from .equalizer import EqualizerArch, EqualizerSweep, TrainingConfig

DEFAULT_LED_COUNTS = [1, 4, 9, 16, 25, 36, 49, 64]
DEFAULT_CODE_RATES = ["1/4", "1/3", "2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "5/6", "8/9", "9/10"]

# stable CSV/JSON column order
RECORD_FIELDS = [
    "led_count", "N_u", "N_h", "rate", "coded", "bit_errors", "bits_total", "ber", "wall_time_s",
    "detector", "ber_upper_95", "diverged", "blocks_converged", "mean_iterations",
]


class Profile(str, Enum):
    desk = "desk"
    paper = "paper"


class OutputFormat(str, Enum):
    csv = "csv"
    json = "json"


class DecoderSettings(BaseModel):
    max_iters: int = Field(default=50, ge=1)
    normalization: float = Field(default=0.75, gt=0.0, le=1.0)
    llr_clip: float = Field(default=25.0, gt=0.0)


class CodedSettings(BaseModel):
    code_length: int = 64800
    rates: List[str] = Field(default_factory=lambda: list(DEFAULT_CODE_RATES))
    small_code_path: Optional[str] = None  # adjacency file overriding the long codes
    blocks_per_point: int = Field(default=3, ge=1)
    arch: EqualizerArch = Field(default_factory=EqualizerArch)
    use_best_architecture: bool = False
    model_path: Optional[str] = None  # pre-trained model used for every led_count

    @field_validator('rates')
    @classmethod
    def nonempty(cls, v):
        if not v:
            raise ValueError("code rate list must be nonempty")
        return v


class OutputSettings(BaseModel):
    directory: str = "results"
    formats: List[OutputFormat] = Field(default_factory=lambda: [OutputFormat.csv, OutputFormat.json])
    record_wall_time: bool = False  # wall_time_s stays 0 unless enabled; measured times differ between reruns


class ReplaySettings(BaseModel):
    frame_dir: Optional[str] = None
    roi: Optional[List[int]] = None  # x0, y0, w, h
    model_path: Optional[str] = None

    @field_validator('roi')
    @classmethod
    def roi_shape(cls, v):
        if v is not None and len(v) != 4:
            raise ValueError("roi must be [x0, y0, w, h]")
        return v


class ExperimentConfig(BaseModel):
    constellation: ConstellationSpec = Field(default_factory=ConstellationSpec)
    chromaticity_mode: ChromaticityMode = ChromaticityMode.tristimulus
    channel: ChannelSettings = Field(default_factory=ChannelSettings)
    led_counts: List[int] = Field(default_factory=lambda: list(DEFAULT_LED_COUNTS))
    equalizer: EqualizerSweep = Field(default_factory=EqualizerSweep)
    training: TrainingConfig = Field(default_factory=lambda: TrainingConfig(epochs=300))
    uncoded_bit_budget: int = Field(default=100_000, ge=1)
    include_baseline: bool = True
    coded: CodedSettings = Field(default_factory=CodedSettings)
    decoder: DecoderSettings = Field(default_factory=DecoderSettings)
    replay: ReplaySettings = Field(default_factory=ReplaySettings)
    profile: Profile = Profile.desk
    seed: int = 20220
    workers: int = Field(default=1, ge=1)
    output: OutputSettings = Field(default_factory=OutputSettings)

    @field_validator('led_counts')
    @classmethod
    def valid_led_counts(cls, v):
        if not v:
            raise ValueError("led_counts must be nonempty")
        if any(c < 1 or c > 64 for c in v):
            raise ValueError("led_count values must lie in [1, 64]")
        return v

    @model_validator(mode='after')
    def check_seed(self):
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        return self

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.constellation.order))

    def channel_params(self, led_count: int) -> ChannelParams:
        return ChannelParams(
            crosstalk=self.channel.crosstalk,
            nonlinearity_gamma=self.channel.nonlinearity_gamma,
            noise_sigma0=self.channel.noise_sigma0,
            led_count=led_count,
            adc_bits=self.channel.adc_bits,
            seed=self.seed,
        )


class BerRecord(BaseModel):
    led_count: int
    N_u: int
    N_h: int
    rate: str = "uncoded"
    coded: bool = False
    bit_errors: int = Field(ge=0)
    bits_total: int = Field(gt=0)
    ber: float
    wall_time_s: float = 0.0
    detector: str = "nn"
    ber_upper_95: float = 0.0
    diverged: bool = False
    blocks_converged: Optional[int] = None
    mean_iterations: Optional[float] = None

    @model_validator(mode='after')
    def ber_consistent(self):
        if self.bit_errors > self.bits_total:
            raise ValueError("bit_errors cannot exceed bits_total")
        if self.ber != self.bit_errors / self.bits_total:
            raise ValueError("ber must equal bit_errors / bits_total")
        return self


class CalibrationResult(BaseModel):
    target: str
    led_count: int
    noise_sigma0: float
    achieved_ber: float
    reachable: bool
    evaluations: int


class ReplayReport(BaseModel):
    frames: int
    roi: List[int]
    hard_symbols: List[int]
    nn_symbols: Optional[List[int]] = None
    reference_symbols: Optional[List[int]] = None  # from the frame directory manifest
    hard_bit_errors: Optional[int] = None
    nn_bit_errors: Optional[int] = None
    bits_total: Optional[int] = None
    mean_led_area_fraction: float = 0.0
