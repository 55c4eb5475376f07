"""
RGB <-> CIE 1931 conversions used for CSK symbol placement and demodulation.

Two projections are available. ``rgb_to_xy`` is the 2x3 matrix product exactly
as the receive chain applies it to raw sensor data (tristimulus X, Y without
normalization); ``rgb_to_xy_chromaticity`` is the textbook normalized
chromaticity. The pipeline picks one through ``ChromaticityMode``.
"""

from typing import Optional

import numpy as np

from app.schemas.colorspace import ChromaticityMode, ChromaticityPoint, RgbIntensity

# Rows X, Y, Z; only the first two rows enter the tristimulus projection.
RGB_TO_XYZ = np.array([
    [0.4124, 0.3576, 0.1805],
    [0.2126, 0.7152, 0.0722],
    [0.0193, 0.1192, 0.9505],
], dtype=np.float64)

RGB_TO_XY = RGB_TO_XYZ[:2]

# Images of the pure primaries under RGB_TO_XY: red, green, blue
PRIMARY_POINTS = RGB_TO_XY.T.copy()


class DegenerateChromaticityError(ValueError):
    """Raised when normalized chromaticity is requested for a zero tristimulus sum"""
    pass


def rgb_to_xy_array(rgb: np.ndarray) -> np.ndarray:
    """Project (..., 3) linear RGB onto (..., 2) tristimulus (X, Y)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    # explicit column sums keep primaries bit-exact (no BLAS reassociation)
    return (
        rgb[..., 0:1] * RGB_TO_XY[:, 0]
        + rgb[..., 1:2] * RGB_TO_XY[:, 1]
        + rgb[..., 2:3] * RGB_TO_XY[:, 2]
    )


def rgb_to_xy_chromaticity_array(rgb: np.ndarray, dark_point: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Normalized (x, y) = (X, Y) / (X + Y + Z) for (..., 3) linear RGB.

    Samples with a zero tristimulus sum raise DegenerateChromaticityError unless
    ``dark_point`` is given, in which case they are mapped onto it.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    xyz = (
        rgb[..., 0:1] * RGB_TO_XYZ[:, 0]
        + rgb[..., 1:2] * RGB_TO_XYZ[:, 1]
        + rgb[..., 2:3] * RGB_TO_XYZ[:, 2]
    )
    total = xyz.sum(axis=-1, keepdims=True)
    dark = total <= 0.0
    if not np.any(dark):
        return xyz[..., :2] / total
    if dark_point is None:
        raise DegenerateChromaticityError("chromaticity is undefined for a zero RGB input")
    points = xyz[..., :2] / np.where(dark, 1.0, total)
    return np.where(dark, np.asarray(dark_point, dtype=np.float64), points)


def project(rgb: np.ndarray, mode: ChromaticityMode = ChromaticityMode.tristimulus,
            dark_point: Optional[np.ndarray] = None) -> np.ndarray:
    """Dispatch to the configured projection. ``dark_point`` only applies to the normalized mode."""
    if ChromaticityMode(mode) is ChromaticityMode.normalized:
        return rgb_to_xy_chromaticity_array(rgb, dark_point)
    return rgb_to_xy_array(rgb)


def rgb_to_xy(rgb: RgbIntensity) -> ChromaticityPoint:
    return ChromaticityPoint.from_array(rgb_to_xy_array(rgb.as_array()))


def rgb_to_xy_chromaticity(rgb: RgbIntensity) -> ChromaticityPoint:
    return ChromaticityPoint.from_array(rgb_to_xy_chromaticity_array(rgb.as_array()))


def barycentric(points: np.ndarray, triangle: np.ndarray = PRIMARY_POINTS) -> np.ndarray:
    """
    Barycentric coordinates of (..., 2) points with respect to a triangle.

    Args:
        points: planar points
        triangle: (3, 2) vertex array

    Returns:
        (..., 3) weights summing to one
    """
    points = np.asarray(points, dtype=np.float64)
    a, b, c = triangle
    basis = np.column_stack([a - c, b - c])
    lam = np.linalg.solve(basis, (points - c).reshape(-1, 2).T).T
    weights = np.column_stack([lam, 1.0 - lam.sum(axis=1)])
    return weights.reshape(points.shape[:-1] + (3,))
