"""Broad classifier with recursively grown enhancement layers.

Each new enhancement layer is the encoder of a sparse autoencoder trained on
the previous layer's activations, shrunk by a fixed compression rate. All
layers are concatenated with the input block and the output weights are
solved in closed form by the ridge pseudo-inverse. Growth stops when the
cross-validated average F-score stops improving.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    FormatError,
    InsufficientClassSamples,
    VersionMismatch,
)
from .evaluation import confusion, f_scores
from .imagery import PATTERN_DIM, FeatureScaler, LabeledDataset, standardize
from .linalg import (
    SparseAutoencoderConfig,
    concat_columns,
    enhance,
    ridge_pseudoinverse_solve,
    train_sparse_autoencoder,
)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class BroadNetConfig:
    """Training knobs for the broad classifier."""

    max_layers: int = 5
    compression: float = 0.9
    first_layer_width: int = 8
    afs_epsilon: float = 0.5  # AFS percentage points
    cv_folds: int = 3
    ridge_lambda: float = 1e-6
    autoencoder: SparseAutoencoderConfig = field(default_factory=SparseAutoencoderConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_layers < 1:
            raise ValueError("max_layers must be at least 1")
        if not 0.0 < self.compression <= 1.0:
            raise ValueError("compression must lie in (0, 1]")
        if self.first_layer_width < 1:
            raise ValueError("first_layer_width must be at least 1")
        if self.afs_epsilon <= 0:
            raise ValueError("afs_epsilon must be positive")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")


@dataclass(frozen=True)
class BroadNetModel:
    """Fitted classifier: scaler, encoder stack, output weights, CV trace."""

    config: BroadNetConfig
    scaler: FeatureScaler
    layers: list[np.ndarray]  # encoder k maps layer k-1 activations
    output_weights: np.ndarray  # (9 + sum of layer widths, 2)
    trace: list[float]  # cross-validated AFS after each layer

    @property
    def input_width(self) -> int:
        return PATTERN_DIM


@dataclass(frozen=True)
class Prediction:
    """Argmax labels over the two raw linear output scores; ties go to 0."""

    labels: np.ndarray  # (n,) int64
    scores: np.ndarray  # (n, 2) float64


def layer_widths(config: BroadNetConfig, n_layers: int) -> list[int]:
    """Width of each enhancement layer under the compression recurrence.

    The first layer has first_layer_width nodes; every later layer keeps
    max(1, floor(compression * previous width)).
    """
    widths: list[int] = []
    for k in range(n_layers):
        if k == 0:
            widths.append(config.first_layer_width)
        else:
            widths.append(max(1, int(np.floor(config.compression * widths[-1]))))
    return widths


def one_hot_targets(labels: np.ndarray) -> np.ndarray:
    """(n, 2) one-hot target matrix: row i has a 1 in column labels[i]."""
    targets = np.zeros((labels.shape[0], 2))
    targets[np.arange(labels.shape[0]), labels] = 1.0
    return targets


def should_stop(trace: list[float], afs_epsilon: float) -> bool:
    """True once the last AFS gain falls below the stopping threshold."""
    return len(trace) >= 2 and trace[-1] - trace[-2] < afs_epsilon


def _labels_from_scores(scores: np.ndarray) -> np.ndarray:
    # strict > so a tie is resolved to class 0 (unchanged)
    return (scores[:, 1] > scores[:, 0]).astype(np.int64)


def _stratified_folds(labels: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Per-row fold index: each class is permuted then dealt round-robin."""
    rng = np.random.default_rng(seed)
    folds = np.empty(labels.shape[0], dtype=np.int64)
    for label in (0, 1):
        class_idx = rng.permutation(np.flatnonzero(labels == label))
        folds[class_idx] = np.arange(class_idx.size) % n_folds
    return folds


def _layer_seed(base_seed: int, layer_index: int) -> int:
    return int(np.random.SeedSequence([base_seed, layer_index]).generate_state(1)[0])


def _cv_average_f_score(
    features: np.ndarray,
    labels: np.ndarray,
    targets: np.ndarray,
    folds: np.ndarray,
    n_folds: int,
    ridge_lambda: float,
) -> float:
    """Mean AFS over folds, re-solving only the output weights per fold."""
    scores = []
    for fold in range(n_folds):
        val = folds == fold
        fit_part = ~val
        weights = ridge_pseudoinverse_solve(
            features[fit_part], targets[fit_part], ridge_lambda
        )
        predicted = _labels_from_scores(features[val] @ weights)
        _, _, afs = f_scores(confusion(labels[val], predicted))
        scores.append(afs)
    return float(np.mean(scores))


def fit(config: BroadNetConfig, train: LabeledDataset) -> BroadNetModel:
    """Train the classifier on a labeled 9-dimensional pattern set.

    Inputs are standardized with training statistics, then enhancement
    layers are added one at a time: a sparse autoencoder (trained on the
    previous layer's activations, labels never seen) supplies the next
    encoder, and the stratified cross-validated AFS of the grown feature
    block decides whether to keep going. Growth ends when the AFS gain in
    two successive layers falls below afs_epsilon or at max_layers. The
    final output weights are solved over the full training set against
    one-hot targets.
    """
    minority = min(train.class_count(0), train.class_count(1))
    if minority == 0:
        raise InsufficientClassSamples("training set must contain both classes")
    if config.cv_folds > minority:
        raise InsufficientClassSamples(
            f"cv_folds={config.cv_folds} exceeds the minority class count {minority}"
        )

    train_std, _, scaler = standardize(train)
    X = train_std.patterns
    labels = train_std.labels
    targets = one_hot_targets(labels)
    folds = _stratified_folds(labels, config.cv_folds, config.seed)

    widths = layer_widths(config, config.max_layers)
    blocks = [X]
    encoders: list[np.ndarray] = []
    trace: list[float] = []
    activations = X
    for k, width in enumerate(widths):
        ae_cfg = replace(config.autoencoder, seed=_layer_seed(config.seed, k))
        encoder = train_sparse_autoencoder(activations, width, ae_cfg)
        activations = enhance(activations, encoder)
        encoders.append(encoder)
        blocks.append(activations)
        trace.append(
            _cv_average_f_score(
                concat_columns(blocks),
                labels,
                targets,
                folds,
                config.cv_folds,
                config.ridge_lambda,
            )
        )
        if should_stop(trace, config.afs_epsilon):
            break

    output_weights = ridge_pseudoinverse_solve(
        concat_columns(blocks), targets, config.ridge_lambda
    )
    return BroadNetModel(
        config=config,
        scaler=scaler,
        layers=encoders,
        output_weights=output_weights,
        trace=trace,
    )


def forward_features(model: BroadNetModel, X: np.ndarray) -> np.ndarray:
    """Concatenated feature block [input | layer1 | layer2 | ...] for raw patterns.

    Standardization with the model's stored statistics is applied here, so X
    is the raw 9-column pattern matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_width:
        raise DimensionMismatch(f"patterns must be (n, {model.input_width})")
    activations = model.scaler.apply(X)
    blocks = [activations]
    for encoder in model.layers:
        activations = enhance(activations, encoder)
        blocks.append(activations)
    return concat_columns(blocks)


def predict(model: BroadNetModel, X: np.ndarray) -> Prediction:
    """Classify raw patterns; scores are the two linear outputs per row."""
    scores = forward_features(model, X) @ model.output_weights
    return Prediction(labels=_labels_from_scores(scores), scores=scores)


def _matrix_to_json(matrix: np.ndarray) -> dict:
    return {
        "rows": int(matrix.shape[0]),
        "cols": int(matrix.shape[1]),
        "data": [float(v) for v in matrix.reshape(-1)],
    }


def _matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    if len(data) != rows * cols:
        raise FormatError(f"matrix data length {len(data)} != {rows}x{cols}")
    return np.asarray(data, dtype=np.float64).reshape(rows, cols)


def save_model(model: BroadNetModel, path) -> None:
    """Write the model as a single JSON document (format version 1)."""
    config = asdict(model.config)
    document = {
        "version": MODEL_FORMAT_VERSION,
        "config": config,
        "mean": [float(v) for v in model.scaler.mean],
        "std": [float(v) for v in model.scaler.std],
        "layers": [_matrix_to_json(layer) for layer in model.layers],
        "output_weights": _matrix_to_json(model.output_weights),
        "trace": [float(v) for v in model.trace],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh)
        fh.write("\n")


def load_model(path) -> BroadNetModel:
    """Read a model saved by save_model; inverse up to bit-identical predictions.

    Raises FormatError on malformed files and VersionMismatch on an unknown
    format version.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot parse model file {path}: {exc}") from exc
    if not isinstance(document, dict) or "version" not in document:
        raise FormatError(f"model file {path} has no format version")
    if document["version"] != MODEL_FORMAT_VERSION:
        raise VersionMismatch(
            f"model file {path} has version {document['version']}, "
            f"expected {MODEL_FORMAT_VERSION}"
        )
    try:
        config_obj = dict(document["config"])
        config_obj["autoencoder"] = SparseAutoencoderConfig(**config_obj["autoencoder"])
        config = BroadNetConfig(**config_obj)
        scaler = FeatureScaler(
            mean=np.asarray(document["mean"], dtype=np.float64),
            std=np.asarray(document["std"], dtype=np.float64),
        )
        layers = [_matrix_from_json(layer) for layer in document["layers"]]
        output_weights = _matrix_from_json(document["output_weights"])
        trace = [float(v) for v in document["trace"]]
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"model file {path} is malformed: {exc}") from exc
    return BroadNetModel(
        config=config,
        scaler=scaler,
        layers=layers,
        output_weights=output_weights,
        trace=trace,
    )
