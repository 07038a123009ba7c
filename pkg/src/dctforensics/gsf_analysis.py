"""GAN-specific frequency discovery and amplification rendering.

Two normalized beta matrices are compared with a per-column chi-square
distance; the AC index maximizing it is the set pair's discriminating
frequency (GSF).  Amplification rescales every block's coefficients so that
the GSF stands out visually: the GSF coefficient is boosted by k2 while all
others, DC included, are attenuated by k1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dct import forward_dct_blocks, inverse_dct_blocks, N_COEFFS
from .errors import BoundsError, ContractError, NoSignalError, ShapeError
from .features import BetaMatrix, N_AC
from .image_io import LuminanceImage, tile_array, untile_array

# Lower bound applied to chi-square denominators.  Normalized columns reach
# exactly NORM_EPSILON at the union minimum; dividing by 1e-6 there would let
# a single row dominate the whole column sum and scramble the argmax, so
# denominators are floored well above the normalization epsilon.
CHI2_DENOMINATOR_FLOOR = 0.01


@dataclass(frozen=True)
class AmplificationParams:
    """Attenuation/boost pair; defaults follow the reference rendering recipe."""

    k1: float = 0.1
    k2: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.k1 <= 1.0:
            raise BoundsError(f"k1 must be in (0, 1], got {self.k1}")
        # k2 == 1 is allowed so that (k1=1, k2=1) is the identity filter
        if not self.k2 >= 1.0:
            raise BoundsError(f"k2 must be >= 1, got {self.k2}")


@dataclass(frozen=True)
class GsfResult:
    """Chi-square profile over the 63 AC coefficients plus its argmax."""

    chi2: np.ndarray
    gsf: int
    runner_up: int
    margin: float
    seed: int = 0

    def chi2_for(self, coefficient: int) -> float:
        if not 1 <= coefficient <= N_AC:
            raise BoundsError(f"AC coefficient {coefficient} outside 1..63")
        return float(self.chi2[coefficient - 1])


def _paired_values(a: BetaMatrix, b: BetaMatrix, seed: int) -> tuple[np.ndarray, np.ndarray]:
    for m in (a, b):
        if not m.normalized:
            raise ContractError(f"matrix {m.label!r} is not normalized; run normalize_columns first")
        if m.values.shape[1] != N_AC:
            raise ShapeError(f"matrix {m.label!r} has {m.values.shape[1]} columns, expected {N_AC}")
    if a.k != b.k:
        raise ShapeError(f"row counts differ: {a.k} vs {b.k}; subsample to a common K first")
    # One seeded permutation shuffles both matrices, then rows pair by index.
    # Using a single permutation keeps chi2(A, A) identically zero.
    perm = np.random.default_rng(seed).permutation(a.k)
    return a.values[perm], b.values[perm]


def chi2_vector(
    a: BetaMatrix,
    b: BetaMatrix,
    seed: int = 0,
    denominator_floor: float = CHI2_DENOMINATOR_FLOOR,
) -> np.ndarray:
    """Per-coefficient chi-square distance sum_r (a[r,c] - b[r,c])^2 / b[r,c].

    The second argument supplies the denominators, so the distance is
    directional.  Denominators are floored at `denominator_floor`.
    """
    av, bv = _paired_values(a, b, seed)
    return ((av - bv) ** 2 / np.maximum(bv, denominator_floor)).sum(axis=0)


def _argmax_high(chi2: np.ndarray) -> int:
    # ties break toward the larger index: scan the reversed vector
    return N_AC - int(np.argmax(chi2[::-1]))


def gsf(a: BetaMatrix, b: BetaMatrix, seed: int = 0) -> GsfResult:
    """Discriminating AC coefficient of the set pair (a, b)."""
    chi2 = chi2_vector(a, b, seed=seed)
    if not chi2.any():
        raise NoSignalError("chi-square vector is identically zero; the sets are indistinguishable")
    best = _argmax_high(chi2)
    rest = chi2.copy()
    rest[best - 1] = -np.inf
    runner = _argmax_high(rest)
    return GsfResult(
        chi2=chi2,
        gsf=best,
        runner_up=runner,
        margin=float(chi2[best - 1] - chi2[runner - 1]),
        seed=seed,
    )


def amplify(
    img: LuminanceImage | np.ndarray,
    gsf_index: int,
    params: AmplificationParams = AmplificationParams(),
) -> np.ndarray:
    """Rescale DCT coefficients per block: gsf_index by k2, all others by k1.

    Returns the raw float image (cropped to whole blocks), intentionally not
    clamped; clamping to [0, 255] happens only when rendering to a file.
    """
    if not 1 <= gsf_index <= N_AC:
        raise BoundsError(f"GSF index {gsf_index} outside 1..63")
    arr = img.samples if isinstance(img, LuminanceImage) else np.asarray(img, dtype=np.float64)
    blocks = tile_array(arr)
    coeffs = forward_dct_blocks(blocks)
    mult = np.full(N_COEFFS, params.k1)
    mult[gsf_index] = params.k2
    out = inverse_dct_blocks(coeffs * mult)
    h, w = arr.shape
    return untile_array(out, h // 8 * 8, w // 8 * 8)


def fourier_magnitude(img: LuminanceImage | np.ndarray) -> np.ndarray:
    """Log-scaled, DC-centered DFT magnitude, normalized to [0, 255]."""
    arr = img.samples if isinstance(img, LuminanceImage) else np.asarray(img, dtype=np.float64)
    spec = np.log1p(np.abs(np.fft.fftshift(np.fft.fft2(arr))))
    lo, hi = spec.min(), spec.max()
    if hi <= lo:
        return np.zeros_like(spec)
    return (spec - lo) / (hi - lo) * 255.0


def _box_smooth(m: np.ndarray, k: int) -> np.ndarray:
    if k <= 1:
        return m
    pad = k // 2
    p = np.pad(m, pad, mode="reflect")
    out = np.zeros_like(m)
    for i in range(k):
        for j in range(k):
            out += p[i : i + m.shape[0], j : j + m.shape[1]]
    return out / (k * k)


def spectral_peak_ratio(
    img: LuminanceImage | np.ndarray,
    dc_radius: float = 4.0,
    smooth: int = 3,
    band_width: int = 8,
) -> float:
    """Peak-to-median ratio of the DFT magnitude, relative to its radial band.

    The magnitude spectrum is box-smoothed, the DC disk excluded, and every
    bin divided by the median of its radial band so the smooth 1/f fall-off of
    natural textures does not register as a peak.  Values near 2 mean a
    featureless spectrum; an isolated tone (an amplified GSF) scores an order
    of magnitude higher.
    """
    arr = img.samples if isinstance(img, LuminanceImage) else np.asarray(img, dtype=np.float64)
    mag = _box_smooth(np.abs(np.fft.fftshift(np.fft.fft2(arr))), smooth)
    h, w = mag.shape
    yy = np.arange(h)[:, None] - h // 2
    xx = np.arange(w)[None, :] - w // 2
    radius = np.hypot(yy, xx)
    keep = radius >= dc_radius
    band = (radius // band_width).astype(np.intp)
    whitened = np.zeros_like(mag)
    for b in np.unique(band[keep]):
        sel = keep & (band == b)
        med = np.median(mag[sel])
        whitened[sel] = mag[sel] / max(med, 1e-12)
    vals = whitened[keep]
    return float(vals.max() / np.median(vals))


def gsf_report(
    a: BetaMatrix,
    b: BetaMatrix,
    seed: int = 0,
) -> dict:
    """Both chi-square directions plus the forward-direction GSF, as JSON-ready data."""
    forward = gsf(a, b, seed=seed)
    reverse = gsf(b, a, seed=seed)
    return {
        "set_a": a.label,
        "set_b": b.label,
        "K": a.k,
        "seed": seed,
        "chi2": [float(x) for x in forward.chi2],
        "gsf": forward.gsf,
        "runner_up": forward.runner_up,
        "margin": forward.margin,
        "reverse_chi2": [float(x) for x in reverse.chi2],
        "reverse_gsf": reverse.gsf,
        "reverse_runner_up": reverse.runner_up,
        "reverse_margin": reverse.margin,
    }
