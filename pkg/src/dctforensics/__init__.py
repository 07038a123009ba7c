"""Frequency-domain deepfake image forensics.

Pipeline: decode images to luminance, tile into 8x8 blocks, transform with
the block DCT, fit a zero-centred Laplacian to every AC coefficient, compare
image sets through per-column chi-square distances to find the discriminating
frequency, and classify with a logistic probe or a gradient-boosted ensemble.
Also ships an attack/robustness harness, a synthetic ground-truth corpus
generator, and amplification rendering for visual inspection.
"""

from .attacks import AttackSpec, apply_attack, augment_dataset, full_grid
from .dct import (
    CoefficientBlock,
    forward_dct,
    forward_dct_blocks,
    inverse_dct,
    inverse_dct_blocks,
    zigzag_index,
    zigzag_position,
)
from .errors import ForensicsError
from .features import (
    BetaMatrix,
    BetaVector,
    LaplacianStats,
    beta_vector,
    betas_for_image,
    build_matrix,
    load_features_csv,
    normalize_columns,
    save_features_csv,
)
from .gsf_analysis import (
    AmplificationParams,
    GsfResult,
    amplify,
    chi2_vector,
    fourier_magnitude,
    gsf,
    gsf_report,
    spectral_peak_ratio,
)
from .image_io import LuminanceImage, PixelBlock, decode, tile, tile_array
from .manifests import DatasetManifest, ManifestEntry, RunConfig
from .models import (
    BoostConfig,
    BoostedEnsemble,
    EvalReport,
    LogisticModel,
    evaluate,
    evaluate_predictions,
    load_model,
    predict,
    save_model,
    stratified_fold_split,
    train_boosted,
    train_logistic,
)
from .synth import ArtifactSpec, generate_corpus, write_corpus

__version__ = "0.1.0"

__all__ = [
    "AmplificationParams",
    "ArtifactSpec",
    "AttackSpec",
    "BetaMatrix",
    "BetaVector",
    "BoostConfig",
    "BoostedEnsemble",
    "CoefficientBlock",
    "DatasetManifest",
    "EvalReport",
    "ForensicsError",
    "GsfResult",
    "LaplacianStats",
    "LogisticModel",
    "LuminanceImage",
    "ManifestEntry",
    "PixelBlock",
    "RunConfig",
    "amplify",
    "apply_attack",
    "augment_dataset",
    "beta_vector",
    "betas_for_image",
    "build_matrix",
    "chi2_vector",
    "decode",
    "evaluate",
    "evaluate_predictions",
    "forward_dct",
    "forward_dct_blocks",
    "fourier_magnitude",
    "full_grid",
    "generate_corpus",
    "gsf",
    "gsf_report",
    "inverse_dct",
    "inverse_dct_blocks",
    "load_features_csv",
    "load_model",
    "normalize_columns",
    "predict",
    "save_features_csv",
    "save_model",
    "spectral_peak_ratio",
    "stratified_fold_split",
    "tile",
    "tile_array",
    "train_boosted",
    "train_logistic",
    "write_corpus",
    "zigzag_index",
    "zigzag_position",
]
