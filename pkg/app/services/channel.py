"""
Parametric camera-link surrogate.

transmit: crosstalk H.s -> per-channel power law -> Gaussian noise with
sigma0 / sqrt(led_count) -> clip to [0, 1] -> uniform ADC quantization.
"""

import logging
from typing import Iterable, Optional, Union

import numpy as np

from app.schemas.channel import DEFAULT_CROSSTALK, ChannelParams
from app.schemas.colorspace import RgbIntensity

logger = logging.getLogger(__name__)

# Stream tags mixed into the seed so training, evaluation and coded runs never share draws
STREAM_TRAIN = 0
STREAM_EVAL = 1
STREAM_INIT = 2
STREAM_CODED = 3
STREAM_CALIBRATE = 4
STREAM_DIAGNOSTIC = 5


def default_crosstalk() -> np.ndarray:
    return np.array(DEFAULT_CROSSTALK, dtype=np.float64)


def noise_source(seed: int, *key: Union[int, Iterable[int]]) -> np.random.Generator:
    """
    Independent generator for (master seed, key...).

    The same key always yields the same stream regardless of which worker or in
    which order it is requested.
    """
    entropy = [int(seed)]
    for part in key:
        if isinstance(part, (list, tuple)):
            entropy.extend(int(p) for p in part)
        else:
            entropy.append(int(part))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def quantize(v, bits: int = 12):
    """Clip to [0, 1] and round to the nearest k / (2^bits - 1)."""
    levels = (1 << bits) - 1
    out = np.round(np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0) * levels) / levels
    if np.ndim(out) == 0:
        return float(out)
    return out


def transmit_array(drives: np.ndarray, params: ChannelParams,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Pass (N, 3) drives through the channel.

    Args:
        drives: transmitter RGB levels in [0, 1]
        params: channel parameters
        rng: noise source; consumed in row order so results depend only on its state.
            Defaults to the stream keyed by (params.seed, params.led_count).

    Returns:
        (N, 3) quantized sensor readings
    """
    if rng is None:
        rng = noise_source(params.seed, params.led_count)
    drives = np.atleast_2d(np.asarray(drives, dtype=np.float64))
    mixed = drives @ params.crosstalk_matrix.T
    if params.nonlinearity_gamma != 1.0:
        mixed = np.power(np.maximum(mixed, 0.0), params.nonlinearity_gamma)
    sigma = params.noise_sigma
    if sigma > 0.0:
        mixed = mixed + rng.normal(0.0, sigma, size=mixed.shape)
    return quantize(mixed, params.adc_bits)


def transmit(s: RgbIntensity, params: ChannelParams, rng: Optional[np.random.Generator] = None) -> RgbIntensity:
    return RgbIntensity.from_array(transmit_array(s.as_array()[None, :], params, rng)[0])
