import numpy as np

POSTERIOR_EPS = 1e-12
DEFAULT_LLR_CLIP = 25.0


def compute_llr(posteriors, l_max: float = DEFAULT_LLR_CLIP) -> np.ndarray:
    """
    Per-bit LLR ln((1 - p) / p), positive when bit 0 is more likely.

    Posteriors are clamped to [1e-12, 1 - 1e-12] first; the result is clipped
    to +-l_max. Works on any array shape.
    """
    p = np.clip(np.asarray(posteriors, dtype=np.float64), POSTERIOR_EPS, 1.0 - POSTERIOR_EPS)
    return np.clip(np.log1p(-p) - np.log(p), -l_max, l_max)


def llr_hard_decisions(llrs) -> np.ndarray:
    """Negative LLR means bit 1."""
    return (np.asarray(llrs) < 0.0).astype(np.uint8)
