"""Image attack grid for robustness training and testing.

Six attack families: random filled rectangle, Gaussian blur, rotation,
mirroring, rescaling and JPEG recompression.  Every attack is deterministic
given (image, spec, seed); the only stochastic one, the random square, draws
all of its parameters from a generator seeded by the spec.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import AttackSpecError
from .image_io import LuminanceImage, decode, write_png

logger = logging.getLogger(__name__)

BLUR_KERNELS = (3, 9, 15)
ROTATION_DEGREES = (45, 90, 135, 180, 225)
MIRROR_AXES = ("H", "V", "B")
SCALE_PERCENTS = (50, -50)
JPEG_QUALITY_FACTORS = (1, 50, 100)

# side of the random square, as a fraction of min(width, height)
SQUARE_SIDE_RANGE = (0.10, 0.30)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    parameter: object = None
    seed: int = 0

    def __post_init__(self):
        kind, p = self.kind, self.parameter
        if kind == "random-square":
            if p is not None:
                raise AttackSpecError("random-square takes no parameter")
        elif kind == "gaussian-blur":
            if p not in BLUR_KERNELS:
                raise AttackSpecError(f"blur kernel must be one of {BLUR_KERNELS}, got {p!r}")
        elif kind == "rotation":
            if p not in ROTATION_DEGREES:
                raise AttackSpecError(f"rotation degrees must be one of {ROTATION_DEGREES}, got {p!r}")
        elif kind == "mirror":
            if p not in MIRROR_AXES:
                raise AttackSpecError(f"mirror axis must be one of {MIRROR_AXES}, got {p!r}")
        elif kind == "scale":
            if p not in SCALE_PERCENTS:
                raise AttackSpecError(f"scale percent must be one of {SCALE_PERCENTS}, got {p!r}")
        elif kind == "jpeg":
            if p not in JPEG_QUALITY_FACTORS:
                raise AttackSpecError(f"JPEG QF must be one of {JPEG_QUALITY_FACTORS}, got {p!r}")
        else:
            raise AttackSpecError(f"unknown attack kind {kind!r}")

    def tag(self) -> str:
        if self.kind == "random-square":
            return "square"
        p = self.parameter
        if self.kind == "scale":
            p = f"+{p}" if p > 0 else str(p)
        return f"{self.kind.split('-')[-1]}_{p}"

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "AttackSpec":
        """Parse 'kind' or 'kind:parameter', e.g. 'jpeg:50', 'mirror:H'."""
        kind, _, raw = text.partition(":")
        kind = kind.strip()
        raw = raw.strip()
        if kind == "random-square" or (kind == "square" and not raw):
            return cls("random-square", seed=seed)
        if not raw:
            raise AttackSpecError(f"attack {kind!r} needs a parameter, e.g. '{kind}:...'")
        if kind == "mirror":
            return cls(kind, raw.upper(), seed=seed)
        try:
            value = int(raw)
        except ValueError as exc:
            raise AttackSpecError(f"non-integer parameter {raw!r} for {kind!r}") from exc
        return cls(kind, value, seed=seed)


def full_grid(seed: int = 0) -> list[AttackSpec]:
    """The complete 17-attack grid."""
    specs = [AttackSpec("random-square", seed=seed)]
    specs += [AttackSpec("gaussian-blur", k, seed) for k in BLUR_KERNELS]
    specs += [AttackSpec("rotation", d, seed) for d in ROTATION_DEGREES]
    specs += [AttackSpec("mirror", a, seed) for a in MIRROR_AXES]
    specs += [AttackSpec("scale", p, seed) for p in SCALE_PERCENTS]
    specs += [AttackSpec("jpeg", q, seed) for q in JPEG_QUALITY_FACTORS]
    return specs


def _gaussian_kernel(size: int) -> np.ndarray:
    sigma = 0.3 * ((size - 1) / 2 - 1) + 0.8
    x = np.arange(size) - (size - 1) / 2
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    pad = len(kernel) // 2
    widths = [(0, 0), (0, 0)]
    widths[axis] = (pad, pad)
    p = np.pad(arr, widths, mode="reflect")
    out = np.zeros_like(arr)
    for t, w in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(t, t + arr.shape[axis])
        out += w * p[tuple(sl)]
    return out


def _blur(arr: np.ndarray, size: int) -> np.ndarray:
    k = _gaussian_kernel(size)
    return _convolve_axis(_convolve_axis(arr, k, 0), k, 1)


def _random_square(arr: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h, w = arr.shape
    base = min(h, w)
    lo, hi = SQUARE_SIDE_RANGE
    side_h = max(1, int(round(rng.uniform(lo, hi) * base)))
    side_w = max(1, int(round(rng.uniform(lo, hi) * base)))
    side_h, side_w = min(side_h, h), min(side_w, w)
    y0 = int(rng.integers(0, h - side_h + 1))
    x0 = int(rng.integers(0, w - side_w + 1))
    color = float(rng.integers(0, 256))
    out = arr.copy()
    out[y0 : y0 + side_h, x0 : x0 + side_w] = color
    return out


def _rotate(arr: np.ndarray, degrees: int) -> np.ndarray:
    if degrees % 90 == 0:
        # pure pixel permutation, counter-clockwise
        return np.rot90(arr, k=degrees // 90).copy()
    im = Image.fromarray(arr.astype(np.float32), mode="F")
    rotated = im.rotate(degrees, resample=Image.BILINEAR, expand=True, fillcolor=0.0)
    return np.asarray(rotated, dtype=np.float64)


def _mirror(arr: np.ndarray, axis: str) -> np.ndarray:
    if axis == "H":
        return arr[:, ::-1].copy()
    if axis == "V":
        return arr[::-1, :].copy()
    return arr[::-1, ::-1].copy()


def _scale(arr: np.ndarray, percent: int) -> np.ndarray:
    factor = 1.0 + percent / 100.0
    h, w = arr.shape
    new_w = max(1, int(round(w * factor)))
    new_h = max(1, int(round(h * factor)))
    im = Image.fromarray(arr.astype(np.float32), mode="F")
    return np.asarray(im.resize((new_w, new_h), resample=Image.BILINEAR), dtype=np.float64)


def _jpeg(arr: np.ndarray, quality: int) -> np.ndarray:
    im = Image.fromarray(np.clip(np.rint(arr), 0, 255).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    im.save(buf, format="JPEG", quality=quality)
    buf.seek(0)
    with Image.open(buf) as back:
        return np.asarray(back, dtype=np.float64)


def apply_attack(img: LuminanceImage | np.ndarray, spec: AttackSpec) -> LuminanceImage:
    arr = img.samples if isinstance(img, LuminanceImage) else np.asarray(img, dtype=np.float64)
    if spec.kind == "random-square":
        out = _random_square(arr, spec.seed)
    elif spec.kind == "gaussian-blur":
        out = _blur(arr, spec.parameter)
    elif spec.kind == "rotation":
        out = _rotate(arr, spec.parameter)
    elif spec.kind == "mirror":
        out = _mirror(arr, spec.parameter)
    elif spec.kind == "scale":
        out = _scale(arr, spec.parameter)
    else:
        out = _jpeg(arr, spec.parameter)
    return LuminanceImage(np.clip(out, 0.0, 255.0))


def augment_dataset(
    entries,
    specs,
    out_dir,
    seed: int = 0,
    luminance: str = "bt601",
):
    """Write attacked variants of every manifest entry.

    Returns (new_entries, provenance_records, errors).  Failures are collected
    per item; the run continues past them.  Each (item, spec) pair gets its
    own child seed so outputs are reproducible regardless of scheduling.
    """
    new_entries = []
    provenance = []
    errors = []
    specs = list(specs)
    if not specs:
        return new_entries, provenance, errors
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for item_idx, entry in enumerate(entries):
        try:
            img = decode(entry.path, luminance=luminance)
        except Exception as exc:  # per-item isolation
            errors.append({"path": entry.path, "error": str(exc)})
            logger.warning("skipping %s: %s", entry.path, exc)
            continue
        stem = Path(entry.path).stem
        for spec_idx, spec in enumerate(specs):
            child_seed = int(
                np.random.SeedSequence([seed, item_idx, spec_idx]).generate_state(1)[0]
            )
            bound = AttackSpec(spec.kind, spec.parameter, seed=child_seed)
            attacked = apply_attack(img, bound)
            out_path = out_dir / f"{stem}__{bound.tag()}.png"
            write_png(out_path, attacked.samples)
            new_entries.append((str(out_path), entry.label, getattr(entry, "split", "unassigned")))
            provenance.append(
                {
                    "original": entry.path,
                    "output": str(out_path),
                    "kind": bound.kind,
                    "parameter": bound.parameter,
                    "seed": child_seed,
                }
            )
    return new_entries, provenance, errors


def write_provenance(path, records) -> None:
    with open(Path(path), "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
