"""
Mini-batch training of the multi-label equalizer.

The full-dataset loss is recorded for the initial parameters and after every
epoch; the returned model is the one with the lowest recorded loss.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.schemas.equalizer import EqualizerArch, OptimizerType, TrainingConfig
from app.services.channel import STREAM_INIT, noise_source
from app.services.constellation import symbols_to_bits
from app.services.equalizer.mlp import MlpModel, bce_loss, init_model, loss_and_gradients

logger = logging.getLogger(__name__)

ADAM_EPS = 1e-8


class TrainingDivergenceError(RuntimeError):
    """Raised when the training loss becomes non-finite"""

    def __init__(self, epoch: int, best_model: Optional[MlpModel] = None, loss: float = float("nan")):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.best_model = best_model
        self.loss = loss


@dataclass
class TrainingData:
    """Received points with their transmitted symbols"""
    points: np.ndarray   # (N, 2)
    symbols: np.ndarray  # (N,)
    bits_per_symbol: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        self.symbols = np.asarray(self.symbols, dtype=np.int64).reshape(-1)
        if len(self.points) != len(self.symbols):
            raise ValueError("points and symbols must have the same length")
        if len(self.points) == 0:
            raise ValueError("training data must be nonempty")

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def bits(self) -> np.ndarray:
        return symbols_to_bits(self.symbols, self.bits_per_symbol).astype(np.float64)

    @classmethod
    def from_pairs(cls, pairs: Sequence) -> "TrainingData":
        """Build from a list of (ChromaticityPoint, SymbolBits)."""
        if not pairs:
            raise ValueError("training data must be nonempty")
        width = len(pairs[0][1].bits)
        return cls(
            points=np.array([p.as_array() for p, _ in pairs]),
            symbols=np.array([b.value for _, b in pairs]),
            bits_per_symbol=width,
        )


@dataclass
class TrainingRun:
    model: MlpModel
    best_epoch: int
    best_loss: float
    losses: List[float] = field(default_factory=list)  # index 0 is the initial loss


class _Adam:
    def __init__(self, params: List[np.ndarray], config: TrainingConfig):
        self.lr = config.learning_rate
        self.beta1 = config.beta1
        self.beta2 = config.beta2
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


class _Sgd:
    def __init__(self, params: List[np.ndarray], config: TrainingConfig):
        self.lr = config.learning_rate

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


def _optimizer(params: List[np.ndarray], config: TrainingConfig):
    if OptimizerType(config.optimizer) is OptimizerType.adam:
        return _Adam(params, config)
    return _Sgd(params, config)


def fit(
    dataset,
    arch: EqualizerArch,
    config: TrainingConfig,
    bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    on_epoch: Optional[Callable[[int, float], None]] = None,
) -> TrainingRun:
    """
    Train an equalizer and keep the best parameters seen.

    Args:
        dataset: TrainingData or a list of (ChromaticityPoint, SymbolBits)
        arch: hidden width, depth and activation
        config: optimizer settings; config.seed drives initialization and shuffling
        bounds: (lo, hi) box mapped onto [-1, 1]^2; defaults to the data's bounding box
        on_epoch: called with (epoch, loss) after each epoch

    Raises:
        TrainingDivergenceError: the loss became non-finite
    """
    data = dataset if isinstance(dataset, TrainingData) else TrainingData.from_pairs(dataset)
    points, bits = data.points, data.bits
    if bounds is None:
        bounds = (points.min(axis=0), points.max(axis=0))

    rng = noise_source(config.seed, STREAM_INIT)
    model = init_model(arch, data.bits_per_symbol, rng, bounds)
    params = model.parameters()
    optimizer = _optimizer(params, config)
    n = len(data)
    batch = min(config.batch_size, n)

    best_loss = bce_loss(model, points, bits)
    best = model.copy()
    best_epoch = 0
    losses = [best_loss]
    if not np.isfinite(best_loss):
        raise TrainingDivergenceError(0, None, best_loss)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            _, grads = loss_and_gradients(model, points[idx], bits[idx])
            optimizer.step(params, grads)

        loss = bce_loss(model, points, bits)
        losses.append(loss)
        if not np.isfinite(loss):
            logger.warning(f"Training diverged at epoch {epoch}; best loss {best_loss:.6f} at epoch {best_epoch}")
            raise TrainingDivergenceError(epoch, best, loss)
        if loss < best_loss:
            best_loss, best, best_epoch = loss, model.copy(), epoch
        if on_epoch:
            on_epoch(epoch, loss)

    logger.info(
        f"Trained {arch.n_units}x{arch.n_hidden} equalizer on {n} samples: "
        f"best loss {best_loss:.6f} at epoch {best_epoch}/{config.epochs}"
    )
    return TrainingRun(model=best, best_epoch=best_epoch, best_loss=best_loss, losses=losses)


def train(dataset, arch: EqualizerArch, config: TrainingConfig, **kwargs) -> MlpModel:
    return fit(dataset, arch, config, **kwargs).model
