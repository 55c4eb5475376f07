"""
Multi-label perceptron: 2 -> N_u x N_h -> M, one sigmoid per bit.

Weights are stored as (fan_in, fan_out) so a batch flows as X @ W + b.
Inputs are rescaled to [-1, 1]^2 with the affine transform carried by the model.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.special import expit

from app.schemas.equalizer import Activation, EqualizerArch

logger = logging.getLogger(__name__)

# |logit| bound for reported posteriors; expit(36) < 1 in float64
LOGIT_LIMIT = 36.0


@dataclass
class MlpModel:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: Activation = Activation.relu
    input_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    input_scale: np.ndarray = field(default_factory=lambda: np.ones(2))

    def __post_init__(self):
        self.activation = Activation(self.activation)
        self.input_offset = np.asarray(self.input_offset, dtype=np.float64)
        self.input_scale = np.asarray(self.input_scale, dtype=np.float64)
        if len(self.weights) != len(self.biases) or len(self.weights) < 2:
            raise ValueError("model needs at least one hidden layer and an output layer")
        fan_in = 2
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or w.shape[0] != fan_in or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i} shape {w.shape}/{b.shape} does not chain from {fan_in}")
            fan_in = w.shape[1]
        hidden = {w.shape[1] for w in self.weights[:-1]}
        if len(hidden) != 1:
            raise ValueError("all hidden layers must have the same width")
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise ValueError("model parameters must be finite")

    @property
    def n_hidden(self) -> int:
        return len(self.weights) - 1

    @property
    def n_units(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def arch(self) -> EqualizerArch:
        return EqualizerArch(n_units=self.n_units, n_hidden=self.n_hidden, activation=self.activation)

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in layer order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            input_offset=self.input_offset.copy(),
            input_scale=self.input_scale.copy(),
        )

    def normalize(self, points: np.ndarray) -> np.ndarray:
        return (points - self.input_offset) * self.input_scale


def normalization_for(bounds_lo: np.ndarray, bounds_hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Offset and scale that send the box [lo, hi] onto [-1, 1]^2."""
    lo = np.asarray(bounds_lo, dtype=np.float64)
    hi = np.asarray(bounds_hi, dtype=np.float64)
    span = hi - lo
    scale = np.where(span > 0, 2.0 / np.where(span > 0, span, 1.0), 1.0)
    return (lo + hi) / 2.0, scale


def init_model(
    arch: EqualizerArch,
    output_dim: int,
    rng: np.random.Generator,
    bounds: Tuple[np.ndarray, np.ndarray] = (np.zeros(2), np.ones(2)),
) -> MlpModel:
    """Uniform fan-in scaled weights, zero biases."""
    sizes = [2] + [arch.n_units] * arch.n_hidden + [output_dim]
    gain = 6.0 if Activation(arch.activation) is Activation.relu else 3.0
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(gain / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    offset, scale = normalization_for(*bounds)
    return MlpModel(weights, biases, arch.activation, offset, scale)


def zero_model(arch: EqualizerArch, output_dim: int) -> MlpModel:
    sizes = [2] + [arch.n_units] * arch.n_hidden + [output_dim]
    return MlpModel(
        [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
        [np.zeros(b) for b in sizes[1:]],
        arch.activation,
    )


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.relu:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_slope(z: np.ndarray, a: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.relu:
        return (z > 0.0).astype(np.float64)
    return 1.0 - a * a


def forward_pass(model: MlpModel, points: np.ndarray):
    """
    Run a batch through the network.

    Returns:
        logits (N, M), plus the per-layer inputs and pre-activations needed by backprop
    """
    a = model.normalize(points)
    inputs, pre = [], []
    last = model.n_hidden
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        z = a @ w + b
        if i == last:
            return z, inputs, pre
        pre.append(z)
        a = _activate(z, model.activation)


def _check_points(points) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[-1] != 2:
        raise ValueError(f"equalizer input must be (N, 2), got {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValueError("equalizer input must be finite")
    return points


def logits_batch(model: MlpModel, points) -> np.ndarray:
    logits, _, _ = forward_pass(model, _check_points(points))
    return logits


def forward_batch(model: MlpModel, points) -> np.ndarray:
    """(N, 2) points -> (N, M) posteriors P(bit_k = 1 | x, y), strictly inside (0, 1)."""
    return expit(np.clip(logits_batch(model, points), -LOGIT_LIMIT, LOGIT_LIMIT))


def forward(model: MlpModel, p) -> np.ndarray:
    """Posteriors for one ChromaticityPoint (or length-2 array)."""
    values = p.as_array() if hasattr(p, "as_array") else p
    return forward_batch(model, values)[0]


def hard_decisions(posteriors: np.ndarray) -> np.ndarray:
    return (np.asarray(posteriors) > 0.5).astype(np.uint8)


def bce_loss(model: MlpModel, points: np.ndarray, bits: np.ndarray) -> float:
    """Mean binary cross-entropy over every (sample, bit) pair, computed from logits."""
    logits, _, _ = forward_pass(model, points)
    return float(np.mean(np.logaddexp(0.0, logits) - bits * logits))


def loss_and_gradients(model: MlpModel, points: np.ndarray, bits: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """
    Cross-entropy loss and its gradient for every parameter.

    Returns:
        (loss, gradients) with gradients laid out like model.parameters()
    """
    logits, inputs, pre = forward_pass(model, points)
    loss = float(np.mean(np.logaddexp(0.0, logits) - bits * logits))

    delta = (expit(logits) - bits) / bits.size
    grads: List[np.ndarray] = [None] * (2 * len(model.weights))
    for i in range(len(model.weights) - 1, -1, -1):
        grads[2 * i] = inputs[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            z = pre[i - 1]
            delta = (delta @ model.weights[i].T) * _activation_slope(z, inputs[i], model.activation)
    return loss, grads


def activation_pattern(model: MlpModel, points: np.ndarray) -> List[np.ndarray]:
    """Sign pattern of every hidden pre-activation; used to spot ReLU kinks."""
    _, _, pre = forward_pass(model, points)
    return [z > 0.0 for z in pre]
