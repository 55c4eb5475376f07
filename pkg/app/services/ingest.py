"""
Demosaic-free receive path for 12-bit raw Bayer frames.

Frames are stored in a small self-describing container:

    offset  size  field
    0       4     magic b"OCCR"
    4       2     version (uint16, currently 1)
    6       4     width  (uint32, even)
    10      4     height (uint32, even)
    14      2     pattern tag (uint16: 0 RGGB, 1 BGGR, 2 GRBG, 3 GBRG)
    16      2*w*h samples, little-endian uint16, 12-bit data in the low bits, row-major

All integers are little-endian.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from PIL import Image
from pydantic import BaseModel, Field

from app.schemas.colorspace import RgbIntensity

logger = logging.getLogger(__name__)

FRAME_MAGIC = b"OCCR"
FRAME_VERSION = 1
FRAME_HEADER = struct.Struct("<4sHIIH")
FRAME_SUFFIX = ".occr"
MANIFEST_NAME = "manifest.json"
SAMPLE_MAX = 4095

PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")

# color index (0 R, 1 G, 2 B) at (row % 2, col % 2)
_LAYOUTS = {
    "RGGB": ((0, 1), (1, 2)),
    "BGGR": ((2, 1), (1, 0)),
    "GRBG": ((1, 0), (2, 1)),
    "GBRG": ((1, 2), (0, 1)),
}

# pattern seen after rotating a frame by 180 degrees
ROTATED_PATTERN = {"RGGB": "BGGR", "BGGR": "RGGB", "GRBG": "GBRG", "GBRG": "GRBG"}

PANEL_SIDE = 8  # LED panel is 8 x 8


class RawFrameError(ValueError):
    """Raised for malformed frames, containers or regions of interest"""
    pass


@dataclass(frozen=True, eq=False)
class RawFrame:
    width: int
    height: int
    pattern: str
    samples: np.ndarray = field(repr=False)  # (height, width) uint16

    def __post_init__(self):
        if self.pattern not in _LAYOUTS:
            raise RawFrameError(f"unknown Bayer pattern {self.pattern!r}")
        if self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2:
            raise RawFrameError(f"frame size {self.width}x{self.height} is not whole Bayer quads")
        samples = np.asarray(self.samples)
        if samples.size != self.width * self.height:
            raise RawFrameError(
                f"expected {self.width * self.height} samples, got {samples.size}"
            )
        if not (np.issubdtype(samples.dtype, np.integer) or np.issubdtype(samples.dtype, np.floating)):
            raise RawFrameError(f"samples must be numeric, got dtype {samples.dtype}")
        if samples.size and not np.all(np.isfinite(samples) & (samples == np.floor(samples))):
            raise RawFrameError("samples must be whole sensor codes")
        if samples.size and (samples.min() < 0 or samples.max() > SAMPLE_MAX):
            raise RawFrameError("samples must lie in [0, 4095]")
        samples = samples.reshape(self.height, self.width).astype(np.uint16)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def color_map(self) -> np.ndarray:
        """(height, width) array of color indices 0 R, 1 G, 2 B."""
        layout = np.array(_LAYOUTS[self.pattern], dtype=np.int8)
        return np.tile(layout, (self.height // 2, self.width // 2))

    def rotated(self) -> "RawFrame":
        """The same scene rotated by 180 degrees."""
        return RawFrame(self.width, self.height, ROTATED_PATTERN[self.pattern], self.samples[::-1, ::-1])


class RegionOfInterest(BaseModel):
    x0: int = Field(ge=0)
    y0: int = Field(ge=0)
    w: int = Field(ge=2)
    h: int = Field(ge=2)

    def check_within(self, frame: RawFrame) -> None:
        if self.x0 + self.w > frame.width or self.y0 + self.h > frame.height:
            raise RawFrameError(
                f"ROI ({self.x0}, {self.y0}, {self.w}, {self.h}) exceeds "
                f"{frame.width}x{frame.height} frame"
            )

    def rotated(self, frame: RawFrame) -> "RegionOfInterest":
        return RegionOfInterest(
            x0=frame.width - self.x0 - self.w,
            y0=frame.height - self.y0 - self.h,
            w=self.w,
            h=self.h,
        )


def extract_rgb_raw(frame: RawFrame, roi: RegionOfInterest) -> np.ndarray:
    """Site-wise mean of R, pooled G and B samples inside the ROI, normalized by 4095 (unclipped)."""
    roi.check_within(frame)
    window = np.s_[roi.y0:roi.y0 + roi.h, roi.x0:roi.x0 + roi.w]
    values = frame.samples[window].astype(np.float64)
    colors = frame.color_map()[window]
    means = np.empty(3, dtype=np.float64)
    for channel, name in enumerate("RGB"):
        mask = colors == channel
        if not mask.any():
            raise RawFrameError(f"ROI contains no {name} sites")
        means[channel] = values[mask].mean()
    return means / SAMPLE_MAX


def extract_rgb(frame: RawFrame, roi: RegionOfInterest) -> RgbIntensity:
    return RgbIntensity.from_array(np.clip(extract_rgb_raw(frame, roi), 0.0, 1.0))


def led_area_fraction(frame: RawFrame, threshold: float) -> float:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return float(np.mean(frame.samples / SAMPLE_MAX > threshold))


def panel_geometry(width: int, height: int, tile: int) -> Tuple[int, int]:
    """Top-left pixel of the centered 8x8 LED panel, aligned to Bayer quads."""
    side = PANEL_SIDE * tile
    if side > width or side > height:
        raise RawFrameError(f"{PANEL_SIDE}x{PANEL_SIDE} panel of {tile}px tiles does not fit the frame")
    x0 = ((width - side) // 2) & ~1
    y0 = ((height - side) // 2) & ~1
    return x0, y0


def lit_roi(led_count: int, width: int = 128, height: int = 128, tile: int = 8) -> RegionOfInterest:
    """
    ROI over the completely lit rows of the block drawn by synthesize_frame.

    A partial last row is left out, so every sample inside the ROI belongs to a
    lit LED whatever the led_count.
    """
    if not 1 <= led_count <= PANEL_SIDE * PANEL_SIDE:
        raise RawFrameError("led_count must lie in [1, 64]")
    x0, y0 = panel_geometry(width, height, tile)
    side = _block_side(led_count)
    full_rows = led_count // side
    return RegionOfInterest(x0=x0, y0=y0, w=side * tile, h=full_rows * tile)


def _block_side(led_count: int) -> int:
    return int(np.ceil(np.sqrt(led_count)))


def synthesize_frame(
    rgb,
    led_count: int = 64,
    width: int = 128,
    height: int = 128,
    pattern: str = "RGGB",
    tile: int = 8,
    background: float = 0.0,
) -> RawFrame:
    """
    Render a raw frame of the LED panel showing one color.

    The lit LEDs fill a near-square block in the panel's top-left corner,
    filled row by row; every pixel of a lit tile carries the sample
    round(level * 4095) of its Bayer site color.

    Args:
        rgb: sensor-side RGB level (RgbIntensity or length-3 array)
        led_count: number of lit LEDs, 1..64
        width, height: frame size in pixels (even)
        pattern: Bayer layout tag
        tile: LED tile edge in pixels (even)
        background: normalized level of unlit pixels
    """
    if not 1 <= led_count <= PANEL_SIDE * PANEL_SIDE:
        raise RawFrameError("led_count must lie in [1, 64]")
    if tile < 2 or tile % 2:
        raise RawFrameError("tile edge must be an even number of pixels")
    level = rgb.as_array() if isinstance(rgb, RgbIntensity) else np.asarray(rgb, dtype=np.float64)
    codes = np.round(np.clip(level, 0.0, 1.0) * SAMPLE_MAX).astype(np.uint16)

    scratch = RawFrame(width, height, pattern, np.zeros((height, width), dtype=np.uint16))
    colors = scratch.color_map()
    samples = np.full((height, width), round(background * SAMPLE_MAX), dtype=np.uint16)

    x0, y0 = panel_geometry(width, height, tile)
    side = _block_side(led_count)
    for led in range(led_count):
        row, col = divmod(led, side)
        ys = slice(y0 + row * tile, y0 + (row + 1) * tile)
        xs = slice(x0 + col * tile, x0 + (col + 1) * tile)
        samples[ys, xs] = codes[colors[ys, xs]]
    return RawFrame(width, height, pattern, samples)


def encode_raw_frame(frame: RawFrame) -> bytes:
    header = FRAME_HEADER.pack(
        FRAME_MAGIC, FRAME_VERSION, frame.width, frame.height, PATTERNS.index(frame.pattern)
    )
    return header + frame.samples.astype("<u2").tobytes()


def decode_raw_frame(data: bytes) -> RawFrame:
    if len(data) < FRAME_HEADER.size:
        raise RawFrameError("truncated frame header")
    magic, version, width, height, tag = FRAME_HEADER.unpack_from(data)
    if magic != FRAME_MAGIC:
        raise RawFrameError(f"bad frame magic {magic!r}")
    if version != FRAME_VERSION:
        raise RawFrameError(f"unsupported frame version {version}")
    if tag >= len(PATTERNS):
        raise RawFrameError(f"unknown pattern tag {tag}")
    expected = FRAME_HEADER.size + 2 * width * height
    if len(data) != expected:
        raise RawFrameError(f"frame payload is {len(data)} bytes, expected {expected}")
    samples = np.frombuffer(data, dtype="<u2", offset=FRAME_HEADER.size)
    if samples.size and samples.max() > SAMPLE_MAX:
        raise RawFrameError("sample exceeds 12-bit range")
    return RawFrame(width, height, PATTERNS[tag], samples.reshape(height, width))


def write_raw_frame(frame: RawFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_raw_frame(frame))
    return path


def read_raw_frame(path) -> RawFrame:
    return decode_raw_frame(Path(path).read_bytes())


def list_frames(directory) -> List[Path]:
    return sorted(Path(directory).glob(f"*{FRAME_SUFFIX}"))


def write_manifest(directory, symbols: List[int], metadata: Optional[Dict] = None) -> Path:
    path = Path(directory) / MANIFEST_NAME
    path.write_text(json.dumps({"symbols": [int(s) for s in symbols], **(metadata or {})}, indent=2))
    return path


def read_manifest(directory) -> Optional[Dict]:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        return None
    return json.loads(path.read_text())


def extract_directory(directory, roi: RegionOfInterest) -> np.ndarray:
    """(N, 3) RGB measurements of every frame in a directory, in file-name order."""
    frames = list_frames(directory)
    if not frames:
        raise RawFrameError(f"no {FRAME_SUFFIX} frames in {directory}")
    logger.info(f"Extracting {len(frames)} frames from {directory}")
    return np.array([extract_rgb_raw(read_raw_frame(p), roi) for p in frames]).clip(0.0, 1.0)


def write_frame_preview(frame: RawFrame, path) -> Path:
    """
    8-bit PNG preview at half resolution, one pixel per Bayer quad.

    Each quad's R, mean G and B samples form the preview pixel; for viewing
    captured panels only, the receive path never uses it.
    """
    values = frame.samples.astype(np.float64)
    colors = frame.color_map()
    h2, w2 = frame.height // 2, frame.width // 2
    quads = values.reshape(h2, 2, w2, 2).transpose(0, 2, 1, 3).reshape(h2, w2, 4)
    quad_colors = colors.reshape(h2, 2, w2, 2).transpose(0, 2, 1, 3).reshape(h2, w2, 4)
    preview = np.empty((h2, w2, 3), dtype=np.float64)
    for channel in range(3):
        mask = quad_colors == channel
        preview[..., channel] = (quads * mask).sum(axis=-1) / mask.sum(axis=-1)
    image = Image.fromarray(np.round(preview / SAMPLE_MAX * 255).astype(np.uint8))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.save(path, format="PNG")
    return path
