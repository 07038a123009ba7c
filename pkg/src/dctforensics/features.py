"""Per-image Laplacian scale statistics of AC coefficients.

Across the 8x8 blocks of an image, each AC coefficient follows a zero-centred
Laplacian; its scale is estimated as beta = sigma / sqrt(2) from the population
standard deviation of that coefficient over all blocks.  The DC term is
excluded, giving a 63-value feature vector per image.  Vectors from one image
set stack into a (K, 63) matrix; matrices under comparison are min-max
normalized per column, jointly over the union of both columns, onto
[NORM_EPSILON, 1].
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dct import CoefficientBlock, N_COEFFS, forward_dct_blocks
from .errors import FormatError, InsufficientDataError, ShapeError
from .image_io import LuminanceImage, tile_array

logger = logging.getLogger(__name__)

N_AC = N_COEFFS - 1
SQRT2 = np.sqrt(2.0)
NORM_EPSILON = 1e-6

NORMALIZATION_MODES = ("joint", "per-set")

# column layout of the feature CSV / JSONL files
_META_FIELDS = ("source_id", "label", "block_count")


@dataclass(frozen=True)
class LaplacianStats:
    """Zero-centred Laplacian fit of one coefficient's sample set."""

    sigma: float
    mu: float = 0.0

    @property
    def beta(self) -> float:
        return self.sigma / SQRT2

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "LaplacianStats":
        return cls(sigma=float(np.asarray(values, dtype=np.float64).std()))


@dataclass(frozen=True)
class BetaVector:
    """63 AC scale parameters for one image."""

    betas: np.ndarray
    block_count: int
    source_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.betas, dtype=np.float64)
        if arr.shape != (N_AC,):
            raise ShapeError(f"expected {N_AC} betas, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
            raise ShapeError("betas must be finite and non-negative")
        object.__setattr__(self, "betas", arr)


@dataclass
class BetaMatrix:
    """Stacked beta vectors of one image set (rows are images)."""

    values: np.ndarray
    label: str = ""
    source_ids: tuple = ()
    normalized: bool = False
    column_min: np.ndarray | None = None
    column_max: np.ndarray | None = None
    degenerate_columns: tuple = ()

    @property
    def k(self) -> int:
        return self.values.shape[0]


def _coeff_rows(blocks) -> np.ndarray:
    if isinstance(blocks, np.ndarray):
        if blocks.ndim == 2 and blocks.shape[1] == N_COEFFS:
            return blocks
        if blocks.ndim == 3:
            return forward_dct_blocks(blocks)
        raise ShapeError(f"expected (n, 64) coefficients or (n, 8, 8) blocks, got {blocks.shape}")
    rows = [b.coeffs if isinstance(b, CoefficientBlock) else np.asarray(b, dtype=np.float64) for b in blocks]
    return np.stack(rows)


def beta_vector(blocks, source_id: str = "") -> BetaVector:
    """Estimate the 63 AC betas from a set of coefficient blocks.

    Accepts a sequence of CoefficientBlock or an (n, 64) zigzag array.
    Requires at least two blocks; sigma is the population standard deviation.
    """
    coeffs = _coeff_rows(blocks)
    n = coeffs.shape[0]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 blocks to estimate betas, got {n}")
    sigma = coeffs[:, 1:].std(axis=0)
    if not sigma.any():
        logger.warning("degenerate block set for %r: all AC coefficients constant", source_id)
    return BetaVector(betas=sigma / SQRT2, block_count=n, source_id=source_id)


def betas_for_image(img: LuminanceImage | np.ndarray, source_id: str = "") -> BetaVector:
    """Full image path: tile, forward-DCT every block, estimate betas."""
    blocks = tile_array(img)
    return beta_vector(forward_dct_blocks(blocks), source_id=source_id)


def build_matrix(images: Sequence[BetaVector], label: str = "") -> BetaMatrix:
    """Stack per-image vectors, in input order, into a raw (K, 63) matrix."""
    if len(images) < 2:
        raise InsufficientDataError(f"an image set needs K >= 2 rows, got {len(images)}")
    for v in images:
        if v.betas.shape != (N_AC,):
            raise ShapeError(f"row width {v.betas.shape} != {N_AC}")
    values = np.stack([v.betas for v in images])
    return BetaMatrix(values=values, label=label, source_ids=tuple(v.source_id for v in images))


def normalize_columns(
    pair: tuple[BetaMatrix, BetaMatrix],
    mode: str = "joint",
    epsilon: float = NORM_EPSILON,
) -> tuple[BetaMatrix, BetaMatrix]:
    """Min-max normalize each column onto [epsilon, 1].

    In "joint" mode (default) the min/max of column c are taken over the union
    of both matrices' column-c values and both matrices are rescaled with the
    same parameters.  "per-set" rescales each matrix on its own column ranges.
    Columns with zero range map to the constant 1 and are flagged.
    """
    if mode not in NORMALIZATION_MODES:
        raise ValueError(f"normalization mode must be one of {NORMALIZATION_MODES}, got {mode!r}")
    a, b = pair
    for m in (a, b):
        if m.values.shape[1] != N_AC:
            raise ShapeError(f"matrix {m.label!r} has {m.values.shape[1]} columns, expected {N_AC}")

    def rescale(m: BetaMatrix, lo: np.ndarray, hi: np.ndarray) -> BetaMatrix:
        span = hi - lo
        flat = span <= 0.0
        out = np.empty_like(m.values)
        out[:, ~flat] = epsilon + (1.0 - epsilon) * (m.values[:, ~flat] - lo[~flat]) / span[~flat]
        out[:, flat] = 1.0
        degenerate = tuple(int(c) + 1 for c in np.flatnonzero(flat))
        if degenerate:
            logger.warning("zero-range columns mapped to 1: coefficients %s", degenerate)
        return BetaMatrix(
            values=out,
            label=m.label,
            source_ids=m.source_ids,
            normalized=True,
            column_min=lo.copy(),
            column_max=hi.copy(),
            degenerate_columns=degenerate,
        )

    if mode == "joint":
        union = np.vstack([a.values, b.values])
        lo, hi = union.min(axis=0), union.max(axis=0)
        return rescale(a, lo, hi), rescale(b, lo, hi)
    return (
        rescale(a, a.values.min(axis=0), a.values.max(axis=0)),
        rescale(b, b.values.min(axis=0), b.values.max(axis=0)),
    )


def matrix_from_rows(
    vectors: Sequence[BetaVector], labels: Sequence[str], label: str
) -> BetaMatrix:
    """Select the rows of one dataset tag out of a labeled feature table."""
    picked = [v for v, l in zip(vectors, labels) if l == label]
    return build_matrix(picked, label=label)


def _format_value(x: float) -> str:
    # 17 significant digits: exact float64 round trip
    return format(float(x), ".16e")


def save_features_csv(path, vectors: Sequence[BetaVector], labels: Sequence[str]) -> None:
    if len(vectors) != len(labels):
        raise ShapeError("one label per feature vector required")
    header = list(_META_FIELDS) + [f"beta_{c}" for c in range(1, N_AC + 1)]
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for vec, lab in zip(vectors, labels):
            row = [vec.source_id, lab, str(vec.block_count)]
            row.extend(_format_value(x) for x in vec.betas)
            writer.writerow(row)


def load_features_csv(path) -> tuple[list[BetaVector], list[str]]:
    vectors: list[BetaVector] = []
    labels: list[str] = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = list(_META_FIELDS) + [f"beta_{c}" for c in range(1, N_AC + 1)]
        if header != expected:
            raise FormatError(f"{path}: unexpected feature CSV header")
        for row in reader:
            if len(row) != len(expected):
                raise FormatError(f"{path}: row width {len(row)} != {len(expected)}")
            vectors.append(
                BetaVector(
                    betas=np.array([float(x) for x in row[3:]]),
                    block_count=int(row[2]),
                    source_id=row[0],
                )
            )
            labels.append(row[1])
    return vectors, labels


def save_features_jsonl(path, vectors: Sequence[BetaVector], labels: Sequence[str]) -> None:
    if len(vectors) != len(labels):
        raise ShapeError("one label per feature vector required")
    with open(Path(path), "w") as fh:
        for vec, lab in zip(vectors, labels):
            record = {
                "source_id": vec.source_id,
                "label": lab,
                "block_count": vec.block_count,
            }
            record.update({f"beta_{c + 1}": float(b) for c, b in enumerate(vec.betas)})
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_features_jsonl(path) -> tuple[list[BetaVector], list[str]]:
    vectors: list[BetaVector] = []
    labels: list[str] = []
    with open(Path(path)) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                betas = np.array([rec[f"beta_{c}"] for c in range(1, N_AC + 1)], dtype=np.float64)
                vectors.append(
                    BetaVector(betas=betas, block_count=int(rec["block_count"]), source_id=rec["source_id"])
                )
                labels.append(rec["label"])
            except KeyError as exc:
                raise FormatError(f"{path}: missing field {exc}") from exc
    return vectors, labels
