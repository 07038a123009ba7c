"""8x8 block DCT and zigzag coefficient ordering.

The forward transform is the orthonormal type-II DCT,

    F[u,v] = 1/4 * C(u) * C(v) * sum_{x,y} I[x,y] * cos((2x+1)u*pi/16) * cos((2y+1)v*pi/16)

with C(0) = 1/sqrt(2) and C(k) = 1 otherwise.  It is evaluated as a pair of
matrix products with the precomputed orthonormal basis, so the inverse is the
exact adjoint and round trips are accurate to machine precision.  No level
shift is applied: the transform operates on raw intensities in [0, 255].

Coefficients are stored in the standard JPEG zigzag order; position 0 is the
DC term, positions 1..63 the AC terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, NumericError, ShapeError

BLOCK_SIZE = 8
N_COEFFS = BLOCK_SIZE * BLOCK_SIZE


def _basis_matrix() -> np.ndarray:
    x = np.arange(BLOCK_SIZE)
    u = np.arange(BLOCK_SIZE)[:, None]
    m = np.cos((2 * x + 1) * u * np.pi / 16) / 2.0
    m[0, :] /= np.sqrt(2.0)
    return m


def _zigzag_table() -> np.ndarray:
    table = np.empty((BLOCK_SIZE, BLOCK_SIZE), dtype=np.intp)
    pos = 0
    for s in range(2 * BLOCK_SIZE - 1):
        rows = range(max(0, s - 7), min(s, 7) + 1)
        if s % 2 == 0:
            rows = reversed(rows)
        for u in rows:
            table[u, s - u] = pos
            pos += 1
    return table


_BASIS = _basis_matrix()
_ZIGZAG = _zigzag_table()
# scan position -> flattened (u * 8 + v) grid index
_SCAN_TO_FLAT = np.argsort(_ZIGZAG.ravel())

for _a in (_BASIS, _ZIGZAG, _SCAN_TO_FLAT):
    _a.setflags(write=False)


@dataclass(frozen=True)
class CoefficientBlock:
    """64 DCT coefficients of one block, zigzag ordered (index 0 = DC)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != (N_COEFFS,):
            raise ShapeError(f"expected {N_COEFFS} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NumericError("coefficient block contains non-finite values")
        object.__setattr__(self, "coeffs", c)


def zigzag_index(u: int, v: int) -> int:
    """Scan position of grid cell (u, v); (0,0) -> 0, (7,7) -> 63."""
    if not (0 <= u < BLOCK_SIZE and 0 <= v < BLOCK_SIZE):
        raise BoundsError(f"grid position ({u}, {v}) outside 0..7")
    return int(_ZIGZAG[u, v])


def zigzag_position(index: int) -> tuple[int, int]:
    """Inverse of zigzag_index: scan position -> (u, v)."""
    if not 0 <= index < N_COEFFS:
        raise BoundsError(f"zigzag index {index} outside 0..63")
    flat = int(_SCAN_TO_FLAT[index])
    return flat // BLOCK_SIZE, flat % BLOCK_SIZE


def zigzag_transpose_permutation() -> np.ndarray:
    """perm[i] = zigzag index of the transposed grid cell of zigzag index i.

    Rotating an image by 90 degrees permutes per-block coefficient magnitudes
    by exactly this index map.
    """
    perm = np.empty(N_COEFFS, dtype=np.intp)
    for i in range(N_COEFFS):
        u, v = zigzag_position(i)
        perm[i] = zigzag_index(v, u)
    return perm


def _as_block_array(block) -> np.ndarray:
    values = getattr(block, "values", block)
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (BLOCK_SIZE, BLOCK_SIZE):
        raise ShapeError(f"expected an 8x8 block, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("block contains non-finite values")
    return arr


def forward_dct(block) -> CoefficientBlock:
    """Transform one 8x8 pixel block; accepts a PixelBlock or an 8x8 array."""
    arr = _as_block_array(block)
    f = _BASIS @ arr @ _BASIS.T
    return CoefficientBlock(f.ravel()[_SCAN_TO_FLAT])


def inverse_dct(coeffs) -> np.ndarray:
    """Adjoint of forward_dct.  Returns the raw 8x8 grid, unclamped."""
    c = coeffs.coeffs if isinstance(coeffs, CoefficientBlock) else np.asarray(coeffs, dtype=np.float64)
    if c.shape != (N_COEFFS,):
        raise ShapeError(f"expected {N_COEFFS} coefficients, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NumericError("coefficients contain non-finite values")
    grid = np.empty(N_COEFFS, dtype=np.float64)
    grid[_SCAN_TO_FLAT] = c
    return _BASIS.T @ grid.reshape(BLOCK_SIZE, BLOCK_SIZE) @ _BASIS


def forward_dct_blocks(blocks: np.ndarray) -> np.ndarray:
    """Batch transform: (n, 8, 8) pixel blocks -> (n, 64) zigzag coefficients."""
    arr = np.asarray(blocks, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1:] != (BLOCK_SIZE, BLOCK_SIZE):
        raise ShapeError(f"expected (n, 8, 8) blocks, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("blocks contain non-finite values")
    f = np.einsum("ux,nxy,vy->nuv", _BASIS, arr, _BASIS, optimize=True)
    return f.reshape(-1, N_COEFFS)[:, _SCAN_TO_FLAT]


def inverse_dct_blocks(coeffs: np.ndarray) -> np.ndarray:
    """Batch inverse: (n, 64) zigzag coefficients -> (n, 8, 8) pixel grids."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != N_COEFFS:
        raise ShapeError(f"expected (n, 64) coefficients, got shape {c.shape}")
    grid = np.empty_like(c)
    grid[:, _SCAN_TO_FLAT] = c
    g = grid.reshape(-1, BLOCK_SIZE, BLOCK_SIZE)
    return np.einsum("xu,nuv,yv->nxy", _BASIS.T, g, _BASIS.T, optimize=True)
