"""Synthetic corpora with a known injected frequency artifact.

Base textures are 1/f-spectrum noise with per-image random phase, so their
beta profile decays across the zigzag order the way natural images do.  An
artifact is injected by rescaling one chosen AC coefficient in every 8x8
block before the texture is quantized to 8-bit, which moves exactly that
coefficient's beta by the chosen strength factor and leaves the rest alone.
These corpora are the ground truth for frequency-discovery and classification
tests when no real GAN imagery is on hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dct import forward_dct_blocks, inverse_dct_blocks
from .errors import AttackSpecError, BoundsError, DimensionError
from .features import N_AC
from .image_io import tile_array, untile_array, write_png

DEFAULT_SIZE = 256
PIXEL_STD = 30.0
PIXEL_MEAN = 128.0


@dataclass(frozen=True)
class ArtifactSpec:
    """Which coefficient to touch, how hard, and the corpus seed."""

    target_coefficient: int
    strength: float
    base: str = "pink-noise"
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.target_coefficient <= N_AC:
            raise BoundsError(f"target coefficient {self.target_coefficient} outside 1..63")
        if self.strength < 1.0:
            raise AttackSpecError(f"strength must be >= 1, got {self.strength}")
        if self.base != "pink-noise":
            raise AttackSpecError(f"unknown base texture {self.base!r}")


def _pink_texture(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    white = rng.standard_normal((height, width))
    spectrum = np.fft.fft2(white)
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    radius = np.hypot(fy, fx)
    radius[0, 0] = np.inf  # DC handled via PIXEL_MEAN
    spectrum /= radius
    spectrum[0, 0] = 0.0
    texture = np.fft.ifft2(spectrum).real
    texture *= PIXEL_STD / texture.std()
    return np.clip(texture + PIXEL_MEAN, 0.0, 255.0)


def _inject(texture: np.ndarray, coefficient: int, strength: float) -> np.ndarray:
    blocks = tile_array(texture)
    coeffs = forward_dct_blocks(blocks)
    coeffs[:, coefficient] *= strength
    h, w = texture.shape
    return untile_array(inverse_dct_blocks(coeffs), h, w)


def generate_corpus(
    n: int,
    spec: ArtifactSpec | None = None,
    size: int | tuple[int, int] = DEFAULT_SIZE,
    seed: int = 0,
) -> list[np.ndarray]:
    """n uint8 images; injected when spec is given, clean otherwise.

    When a spec is present its seed drives the texture stream, so a clean and
    an injected corpus built from the same seed share base textures and differ
    only at the target coefficient.  strength == 1 is the identity injection.
    """
    if n < 1:
        raise AttackSpecError(f"corpus size must be >= 1, got {n}")
    height, width = (size, size) if isinstance(size, int) else size
    if height % 8 or width % 8 or height < 8 or width < 8:
        raise DimensionError(f"corpus images must be 8x8-tileable, got {width}x{height}")
    if spec is not None:
        seed = spec.seed
    images = []
    for child in np.random.SeedSequence(seed).spawn(n):
        texture = _pink_texture(np.random.default_rng(child), height, width)
        if spec is not None and spec.strength != 1.0:
            texture = _inject(texture, spec.target_coefficient, spec.strength)
        images.append(np.clip(np.rint(texture), 0, 255).astype(np.uint8))
    return images


def write_corpus(
    out_dir,
    images: list[np.ndarray],
    label: str,
    spec: ArtifactSpec | None = None,
    prefix: str | None = None,
) -> list[str]:
    """Write images as PNG plus a provenance manifest; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = prefix or label
    paths = []
    for i, img in enumerate(images):
        p = out_dir / f"{prefix}_{i:05d}.png"
        write_png(p, img)
        paths.append(str(p))
    provenance = {
        "label": label,
        "count": len(images),
        "base": "pink-noise",
        "artifact": None
        if spec is None
        else {
            "target_coefficient": spec.target_coefficient,
            "strength": spec.strength,
            "base": spec.base,
            "seed": spec.seed,
        },
        "paths": paths,
    }
    (out_dir / f"{prefix}_provenance.json").write_text(
        json.dumps(provenance, sort_keys=True, indent=1) + "\n"
    )
    return paths
