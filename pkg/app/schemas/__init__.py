from .colorspace import ChromaticityMode, ChromaticityPoint, RgbIntensity
from .constellation import ConstellationEntry, ConstellationSpec, ConstellationTable, SymbolBits
from .channel import ChannelParams, ChannelSettings, DEFAULT_CROSSTALK
from .equalizer import Activation, EqualizerArch, EqualizerSweep, OptimizerType, TrainingConfig
from .experiment import (BerRecord, CalibrationResult, ExperimentConfig, OutputFormat, Profile, RECORD_FIELDS,
                         ReplayReport)

__all__ = [
    "ChromaticityMode", "ChromaticityPoint", "RgbIntensity",
    "ConstellationEntry", "ConstellationSpec", "ConstellationTable", "SymbolBits",
    "ChannelParams", "ChannelSettings", "DEFAULT_CROSSTALK",
    "Activation", "EqualizerArch", "EqualizerSweep", "OptimizerType", "TrainingConfig",
    "BerRecord", "CalibrationResult", "ExperimentConfig", "OutputFormat", "Profile", "RECORD_FIELDS", "ReplayReport",
]
