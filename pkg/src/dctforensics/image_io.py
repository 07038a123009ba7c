"""Image decoding, luminance conversion and 8x8 tiling.

PNG and JPEG files are decoded to a single float64 luminance plane.  Color
inputs are reduced with ITU-R BT.601 weights by default; a single R/G/B
channel can be selected instead for ablation runs.  JPEG files are always
re-decoded to pixels, never coefficient-parsed, so PNG and JPEG inputs share
one code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .dct import BLOCK_SIZE
from .errors import DimensionError, FormatError, NumericError

LUMINANCE_MODES = ("bt601", "r", "g", "b")
_SUPPORTED_FORMATS = ("PNG", "JPEG")


@dataclass(frozen=True)
class LuminanceImage:
    """Single-channel image, samples in [0, 255]."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2:
            raise NumericError(f"expected a 2-D sample grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericError("image contains non-finite samples")
        if arr.size and (arr.min() < 0.0 or arr.max() > 255.0):
            raise NumericError("image samples outside [0, 255]")
        object.__setattr__(self, "samples", arr)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class PixelBlock:
    """One 8x8 tile; origin is its (block-row, block-col) in the tiling."""

    values: np.ndarray
    origin: tuple[int, int]


def decode(path, luminance: str = "bt601") -> LuminanceImage:
    """Decode a PNG or JPEG file to a luminance plane.

    BT.601 weighting is computed as (299 R + 587 G + 114 B) / 1000 in float,
    not via the quantized 8-bit conversion, so gray levels keep sub-integer
    precision.
    """
    if luminance not in LUMINANCE_MODES:
        raise ValueError(f"luminance mode must be one of {LUMINANCE_MODES}, got {luminance!r}")
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in _SUPPORTED_FORMATS:
                raise FormatError(f"{path}: unsupported format {im.format!r} (PNG/JPEG only)")
            im.load()
            if im.mode in ("L", "I", "I;16", "F") and luminance == "bt601":
                plane = np.asarray(im.convert("F"), dtype=np.float64)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                if luminance == "bt601":
                    plane = (299.0 * rgb[..., 0] + 587.0 * rgb[..., 1] + 114.0 * rgb[..., 2]) / 1000.0
                else:
                    plane = rgb[..., "rgb".index(luminance)]
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a decodable image ({exc})") from exc
    except (SyntaxError, ValueError, OSError) as exc:
        if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError)):
            raise
        raise FormatError(f"{path}: corrupt or truncated image ({exc})") from exc
    return LuminanceImage(np.clip(plane, 0.0, 255.0))


def tile_array(img: LuminanceImage | np.ndarray) -> np.ndarray:
    """Non-overlapping 8x8 tiles as an (n, 8, 8) array, row-major block order.

    Right/bottom remainders narrower than 8 pixels are discarded.
    """
    arr = img.samples if isinstance(img, LuminanceImage) else np.asarray(img, dtype=np.float64)
    h, w = arr.shape
    if h < BLOCK_SIZE or w < BLOCK_SIZE:
        raise DimensionError(f"image {w}x{h} smaller than one {BLOCK_SIZE}x{BLOCK_SIZE} block")
    hb, wb = h // BLOCK_SIZE, w // BLOCK_SIZE
    trimmed = arr[: hb * BLOCK_SIZE, : wb * BLOCK_SIZE]
    blocks = trimmed.reshape(hb, BLOCK_SIZE, wb, BLOCK_SIZE).swapaxes(1, 2)
    return blocks.reshape(hb * wb, BLOCK_SIZE, BLOCK_SIZE)


def tile(img: LuminanceImage) -> list[PixelBlock]:
    """Tiling with per-block origins; see tile_array for the bulk form."""
    blocks = tile_array(img)
    wb = img.width // BLOCK_SIZE
    return [PixelBlock(values=b, origin=(i // wb, i % wb)) for i, b in enumerate(blocks)]


def untile_array(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    """Reassemble (n, 8, 8) row-major blocks into an (height, width) grid."""
    hb, wb = height // BLOCK_SIZE, width // BLOCK_SIZE
    if blocks.shape[0] != hb * wb:
        raise DimensionError(f"{blocks.shape[0]} blocks cannot fill a {width}x{height} grid")
    grid = blocks.reshape(hb, wb, BLOCK_SIZE, BLOCK_SIZE).swapaxes(1, 2)
    return grid.reshape(hb * BLOCK_SIZE, wb * BLOCK_SIZE)


def write_png(path, samples: np.ndarray) -> None:
    """Render a float sample grid to an 8-bit grayscale PNG (clamped here only)."""
    arr = np.clip(np.rint(np.asarray(samples, dtype=np.float64)), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")
