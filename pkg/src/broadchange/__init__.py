"""Change detection in co-registered aerial image pairs.

The pipeline turns an image pair into per-pixel difference patterns,
rebalances the change/no-change classes, and fits a broad-learning
classifier whose enhancement layers are grown by sparse autoencoders.
"""

from .broadnet import (
    BroadNetConfig,
    BroadNetModel,
    Prediction,
    fit,
    forward_features,
    load_model,
    predict,
    save_model,
)
from .errors import (
    ChangeDetectionError,
    DecodeError,
    DimensionMismatch,
    EmptyClass,
    FormatError,
    GeometryError,
    InsufficientClassSamples,
    InsufficientMajority,
    LengthMismatch,
    NonFiniteInput,
    SingletonClass,
    SingularSystem,
    TargetExceedsAvailable,
    VersionMismatch,
)
from .evaluation import (
    ConfusionCounts,
    EvaluationReport,
    confusion,
    evaluate_labels,
    f_scores,
    format_report_row,
    render_change_map,
    sweep_report,
)
from .imagery import (
    PATTERN_DIM,
    DifferenceImage,
    FeatureScaler,
    ImagePair,
    LabeledDataset,
    LabelGrid,
    binarize_mask,
    difference_magnitude,
    extract_patterns,
    lab_difference_magnitude,
    load_image_pair,
    patterns_from_difference,
    rgb_to_lab,
    split_dataset,
    standardize,
)
from .linalg import (
    SparseAutoencoderConfig,
    concat_columns,
    enhance,
    ridge_pseudoinverse_solve,
    soft_threshold,
    train_sparse_autoencoder,
)
from .resample import (
    STRATEGY_RANDOM_OVER,
    STRATEGY_SMOTE,
    ImbalanceRatio,
    ResampleStrategy,
    random_oversample,
    random_undersample,
    rebalance,
    smote,
)

__version__ = "0.1.0"

__all__ = [
    "BroadNetConfig",
    "BroadNetModel",
    "ChangeDetectionError",
    "ConfusionCounts",
    "DecodeError",
    "DifferenceImage",
    "DimensionMismatch",
    "EmptyClass",
    "EvaluationReport",
    "FeatureScaler",
    "FormatError",
    "GeometryError",
    "ImagePair",
    "ImbalanceRatio",
    "InsufficientClassSamples",
    "InsufficientMajority",
    "LabelGrid",
    "LabeledDataset",
    "LengthMismatch",
    "NonFiniteInput",
    "PATTERN_DIM",
    "Prediction",
    "ResampleStrategy",
    "STRATEGY_RANDOM_OVER",
    "STRATEGY_SMOTE",
    "SingletonClass",
    "SingularSystem",
    "SparseAutoencoderConfig",
    "TargetExceedsAvailable",
    "VersionMismatch",
    "binarize_mask",
    "concat_columns",
    "confusion",
    "difference_magnitude",
    "enhance",
    "evaluate_labels",
    "extract_patterns",
    "f_scores",
    "fit",
    "format_report_row",
    "forward_features",
    "lab_difference_magnitude",
    "load_image_pair",
    "load_model",
    "patterns_from_difference",
    "predict",
    "random_oversample",
    "random_undersample",
    "rebalance",
    "render_change_map",
    "rgb_to_lab",
    "ridge_pseudoinverse_solve",
    "save_model",
    "smote",
    "soft_threshold",
    "split_dataset",
    "standardize",
    "sweep_report",
    "train_sparse_autoencoder",
]
