"""Finite-difference verification of the backpropagation gradients."""

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.services.equalizer.mlp import MlpModel, activation_pattern, bce_loss, loss_and_gradients

logger = logging.getLogger(__name__)

MAX_BATCH = 64
# absolute floor in the relative-error denominator
GRADIENT_FLOOR = 1e-5

GradientFn = Callable[[MlpModel, np.ndarray, np.ndarray], List[np.ndarray]]


def _analytic(model: MlpModel, points: np.ndarray, bits: np.ndarray) -> List[np.ndarray]:
    return loss_and_gradients(model, points, bits)[1]


def _same_pattern(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def gradient_check(
    model: MlpModel,
    points,
    bits,
    sample_size: int = 40,
    step: float = 1e-6,
    seed: int = 0,
    gradient_fn: Optional[GradientFn] = None,
    indices: Optional[Sequence[int]] = None,
) -> float:
    """
    Max relative error between analytic and central-difference gradients.

    Args:
        model: network to check (left unchanged)
        points: (B, 2) inputs, B <= 64
        bits: (B, M) 0/1 targets
        sample_size: number of parameters drawn at random
        step: finite-difference step
        seed: selects the parameter subset
        gradient_fn: alternative gradient implementation under test
        indices: explicit flat parameter indices, checked in addition to the sample

    Returns:
        max |a - n| / max(|a|, |n|, 1e-5) over the checked parameters.
        Parameters whose perturbation flips a ReLU unit are skipped and replaced.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    bits = np.atleast_2d(np.asarray(bits, dtype=np.float64))
    if len(points) > MAX_BATCH:
        raise ValueError(f"gradient check batch is limited to {MAX_BATCH} samples")

    perturbed = model.copy()
    params = perturbed.parameters()
    sizes = [p.size for p in params]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    analytic = np.concatenate([g.ravel() for g in (gradient_fn or _analytic)(perturbed, points, bits)])
    base_pattern = activation_pattern(perturbed, points)

    rng = np.random.default_rng(seed)
    candidates = list(indices or []) + list(rng.permutation(offsets[-1]))
    checked, worst = 0, 0.0
    wanted = sample_size + len(indices or [])
    for flat in candidates:
        if checked >= wanted:
            break
        which = int(np.searchsorted(offsets, flat, side="right") - 1)
        view = params[which].reshape(-1)
        local = int(flat - offsets[which])
        original = view[local]

        view[local] = original + step
        plus = bce_loss(perturbed, points, bits)
        kink = not _same_pattern(activation_pattern(perturbed, points), base_pattern)
        view[local] = original - step
        minus = bce_loss(perturbed, points, bits)
        kink = kink or not _same_pattern(activation_pattern(perturbed, points), base_pattern)
        view[local] = original
        if kink:
            continue

        numeric = (plus - minus) / (2.0 * step)
        a = analytic[flat]
        error = abs(a - numeric) / max(abs(a), abs(numeric), GRADIENT_FLOOR)
        worst = max(worst, error)
        checked += 1

    logger.debug(f"Gradient check over {checked} parameters: max relative error {worst:.3e}")
    return worst
