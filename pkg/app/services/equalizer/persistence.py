"""
Equalizer model files.

Layout (all little-endian):

    offset  size  field
    0       4     magic b"OCCM"
    4       2     version (uint16, currently 1)
    6       2     N_h, hidden layer count (uint16)
    8       4     N_u, hidden layer width (uint32)
    12      2     activation tag (uint16: 0 relu, 1 tanh)
    14      2     output dimension M (uint16)
    16      32    input offset x, y and input scale x, y (4 x float64)
    48      ...   per layer: W (fan_in x fan_out, row-major float64) then b (fan_out float64)
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.schemas.equalizer import Activation
from app.services.equalizer.mlp import MlpModel

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"OCCM"
MODEL_VERSION = 1
MODEL_HEADER = struct.Struct("<4sHHIHH")
NORMALIZATION = struct.Struct("<4d")
ACTIVATION_TAGS = {Activation.relu: 0, Activation.tanh: 1}


class ModelFormatError(ValueError):
    """Raised when a model file is truncated, corrupt or of an unknown version"""
    pass


def encode_model(model: MlpModel) -> bytes:
    parts = [
        MODEL_HEADER.pack(
            MODEL_MAGIC, MODEL_VERSION, model.n_hidden, model.n_units,
            ACTIVATION_TAGS[model.activation], model.output_dim,
        ),
        NORMALIZATION.pack(*model.input_offset, *model.input_scale),
    ]
    for w, b in zip(model.weights, model.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_model(data: bytes) -> MlpModel:
    head = MODEL_HEADER.size + NORMALIZATION.size
    if len(data) < head:
        raise ModelFormatError("truncated model header")
    magic, version, n_hidden, n_units, tag, output_dim = MODEL_HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad model magic {magic!r}")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    activations = {v: k for k, v in ACTIVATION_TAGS.items()}
    if tag not in activations:
        raise ModelFormatError(f"unknown activation tag {tag}")
    if n_hidden < 1 or n_units < 1 or output_dim < 1:
        raise ModelFormatError("model dimensions must be positive")

    sizes = [2] + [n_units] * n_hidden + [output_dim]
    expected = head + 8 * sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
    if len(data) != expected:
        raise ModelFormatError(f"model payload is {len(data)} bytes, expected {expected}")

    values = NORMALIZATION.unpack_from(data, MODEL_HEADER.size)
    flat = np.frombuffer(data, dtype="<f8", offset=head).astype(np.float64)
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out).copy())
        pos += fan_in * fan_out
        biases.append(flat[pos:pos + fan_out].copy())
        pos += fan_out
    try:
        return MlpModel(weights, biases, activations[tag], np.array(values[:2]), np.array(values[2:]))
    except ValueError as e:
        raise ModelFormatError(str(e)) from e


def save_model(model: MlpModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_model(model))
    logger.info(f"Saved {model.n_units}x{model.n_hidden} equalizer to {path}")
    return path


def load_model(path: Union[str, Path]) -> MlpModel:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"model file not found: {path}")
    return decode_model(path.read_bytes())
