"""
512-CSK constellation: a triangular lattice in the RGB drive simplex.

Lattice sites are enumerated row by row starting from the pure-blue vertex;
row r holds the r + 1 sites whose red + green content is r lattice steps,
swept from red toward green. Surplus sites beyond ``order`` are dropped from
the end of the enumeration. Bit labels are the plain binary encoding of the
symbol index.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from app.schemas.colorspace import ChromaticityMode, ChromaticityPoint, RgbIntensity
from app.schemas.constellation import ConstellationEntry, ConstellationTable, SymbolBits
from app.services import colorspace

logger = logging.getLogger(__name__)

# relative slack when deciding that two squared distances tie
TIE_TOLERANCE = 1e-9
DEMOD_CHUNK = 4096


class ConstellationError(ValueError):
    """Raised when a constellation cannot be built with the requested parameters"""
    pass


@dataclass(frozen=True, eq=False)
class CskConstellation:
    order: int
    bits_per_symbol: int
    steps: int
    lattice_rows: int
    drives: np.ndarray = field(repr=False)   # (order, 3) quantized r, g, b
    chroma: np.ndarray = field(repr=False)   # (order, 2) tristimulus x, y
    weights: np.ndarray = field(repr=False)  # (order, 3) unquantized r, g, b

    def __post_init__(self):
        for arr in (self.drives, self.chroma, self.weights):
            arr.setflags(write=False)

    @property
    def dropped_sites(self) -> int:
        return self.lattice_rows * (self.lattice_rows + 1) // 2 - self.order

    def points(self, mode: ChromaticityMode = ChromaticityMode.tristimulus) -> np.ndarray:
        """Reference points in the requested projection."""
        if ChromaticityMode(mode) is ChromaticityMode.tristimulus:
            return self.chroma
        return colorspace.project(self.drives, mode)

    def entry(self, index: int) -> ConstellationEntry:
        r, g, b = self.drives[index]
        x, y = self.chroma[index]
        return ConstellationEntry(
            symbol_index=index,
            bits=format(index, f"0{self.bits_per_symbol}b"),
            r=float(r), g=float(g), b=float(b),
            x=float(x), y=float(y),
        )

    @property
    def entries(self) -> List[ConstellationEntry]:
        return [self.entry(i) for i in range(self.order)]

    def to_table(self) -> ConstellationTable:
        return ConstellationTable(
            order=self.order,
            bits_per_symbol=self.bits_per_symbol,
            steps=self.steps,
            min_distance=min_distance(self),
            entries=self.entries,
        )


def lattice_rows_for(order: int) -> int:
    """Smallest n with n(n+1)/2 >= order."""
    n = int(math.ceil((math.sqrt(8 * order + 1) - 1) / 2))
    while n * (n + 1) // 2 < order:
        n += 1
    return n


def _lattice_sites(rows: int) -> np.ndarray:
    """Barycentric (blue, red, green) integer sites in enumeration order."""
    top = rows - 1
    sites = []
    for row in range(rows):
        for red in range(row, -1, -1):
            sites.append((top - row, red, row - red))
    return np.array(sites, dtype=np.int64)


def quantize_drive(weights: np.ndarray, steps: int) -> np.ndarray:
    levels = steps - 1
    return np.round(np.asarray(weights, dtype=np.float64) * levels) / levels


def build_constellation(order: int = 512, steps: int = 100) -> CskConstellation:
    """
    Build the CSK constellation.

    Args:
        order: symbol count, a power of two >= 4
        steps: emission levels per color channel

    Returns:
        Immutable constellation table

    Raises:
        ConstellationError: order not a power of two, or steps too coarse to keep
            every quantized drive distinct
    """
    if order < 4 or order & (order - 1):
        raise ConstellationError(f"order must be a power of two >= 4, got {order}")
    rows = lattice_rows_for(order)
    if steps < rows:
        raise ConstellationError(
            f"{steps} emission steps cannot resolve a {rows}-row lattice (need at least {rows})"
        )

    sites = _lattice_sites(rows)[:order]
    blue, red, green = sites.T
    weights = np.column_stack([red, green, blue]).astype(np.float64) / (rows - 1)
    drives = quantize_drive(weights, steps)

    if len(np.unique(drives, axis=0)) != order:
        raise ConstellationError(f"{steps} emission steps merge distinct lattice sites")
    chroma = colorspace.rgb_to_xy_array(drives)
    if len(np.unique(chroma, axis=0)) != order:
        raise ConstellationError("quantized drives collide on the chromaticity plane")

    logger.debug(f"Built {order}-CSK constellation: {rows} lattice rows, "
                 f"{rows * (rows + 1) // 2 - order} sites dropped, {steps} steps")
    return CskConstellation(
        order=order,
        bits_per_symbol=int(math.log2(order)),
        steps=steps,
        lattice_rows=rows,
        drives=drives,
        chroma=chroma,
        weights=weights,
    )


@lru_cache(maxsize=8)
def cached_constellation(order: int = 512, steps: int = 100) -> CskConstellation:
    return build_constellation(order, steps)


def symbols_to_bits(symbols: np.ndarray, width: int) -> np.ndarray:
    """(N,) symbol indices -> (N, width) bits, MSB first."""
    symbols = np.asarray(symbols, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((symbols[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_symbols(bits: np.ndarray) -> np.ndarray:
    """(N, width) bits, MSB first -> (N,) symbol indices."""
    bits = np.asarray(bits, dtype=np.int64)
    width = bits.shape[-1]
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return (bits * weights).sum(axis=-1)


def modulate(c: CskConstellation, bits: SymbolBits) -> RgbIntensity:
    if len(bits.bits) != c.bits_per_symbol:
        raise ValueError(f"expected {c.bits_per_symbol} bits, got {len(bits.bits)}")
    return RgbIntensity.from_array(c.drives[bits.value])


def modulate_symbols(c: CskConstellation, symbols: np.ndarray) -> np.ndarray:
    return c.drives[np.asarray(symbols, dtype=np.int64)]


def nearest_symbols(reference: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Nearest reference point for each of (N, 2) points.

    Ties within TIE_TOLERANCE (relative) resolve to the smallest index.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(len(points), dtype=np.int64)
    for start in range(0, len(points), DEMOD_CHUNK):
        chunk = points[start:start + DEMOD_CHUNK]
        d2 = ((chunk[:, None, :] - reference[None, :, :]) ** 2).sum(axis=-1)
        best = d2.min(axis=1, keepdims=True)
        # argmax of a boolean row returns the first True, i.e. the smallest index
        out[start:start + len(chunk)] = np.argmax(d2 <= best * (1.0 + TIE_TOLERANCE), axis=1)
    return out


def hard_demodulate(c: CskConstellation, p: ChromaticityPoint) -> Tuple[int, SymbolBits]:
    index = int(nearest_symbols(c.chroma, p.as_array()[None, :])[0])
    return index, SymbolBits.from_index(index, c.bits_per_symbol)


def hard_demodulate_points(c: CskConstellation, points: np.ndarray,
                           mode: ChromaticityMode = ChromaticityMode.tristimulus) -> np.ndarray:
    return nearest_symbols(c.points(mode), points)


def min_distance(c: CskConstellation) -> float:
    return float(pdist(c.chroma).min())


def gamut_coordinates(c: CskConstellation) -> np.ndarray:
    """
    Barycentric coordinates of every point with respect to the primary triangle.

    Each point is divided by its drive sum first: per-channel emission
    quantization moves the sum off one by at most 1.5/(steps-1), which scales
    the tristimulus point without changing its direction.
    """
    sums = c.drives.sum(axis=1, keepdims=True)
    return colorspace.barycentric(c.chroma / sums)


CONSTELLATION_HEADER = ["symbol_index", "bits", "r", "g", "b", "x", "y"]


def constellation_rows(c: CskConstellation) -> List[list]:
    """Table rows in CONSTELLATION_HEADER order, for CSV export."""
    return [[e.symbol_index, e.bits, e.r, e.g, e.b, e.x, e.y] for e in c.entries]
