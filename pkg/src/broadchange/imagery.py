"""Image pairs, difference images, and labeled 9-dimensional pixel patterns.

The front end of the pipeline: load a co-registered RGB pair, convert to
L*a*b*, reduce the per-channel absolute differences to one scalar magnitude
per pixel, and cut the magnitude grid into 3x3 neighborhood patterns labeled
by a ground-truth mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DimensionMismatch, InsufficientClassSamples

#: Every pixel pattern is its 3x3 difference-image neighborhood, flattened.
PATTERN_DIM = 9

# sRGB -> CIE XYZ linear map, D65 white point, 2 degree observer.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


@dataclass(frozen=True)
class ImagePair:
    """Co-registered reference/test RGB8 rasters of equal size."""

    reference: np.ndarray  # (H, W, 3) uint8
    test: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self) -> None:
        for name in ("reference", "test"):
            arr = getattr(self, name)
            if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
                raise DimensionMismatch(f"{name} must be an (H, W, 3) uint8 raster")
        if self.reference.shape != self.test.shape:
            raise DimensionMismatch(
                f"reference is {self.reference.shape[:2]}, test is {self.test.shape[:2]}"
            )
        if self.height < 1 or self.width < 1:
            raise DimensionMismatch("images must be at least 1x1")

    @property
    def height(self) -> int:
        return self.reference.shape[0]

    @property
    def width(self) -> int:
        return self.reference.shape[1]


@dataclass(frozen=True)
class DifferenceImage:
    """Per-pixel non-negative change magnitude derived from L*a*b* differences."""

    values: np.ndarray  # (H, W) float64, >= 0

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise DimensionMismatch("difference values must be a 2-d grid")
        if np.any(self.values < 0):
            raise ValueError("difference magnitudes must be non-negative")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelGrid:
    """Binary ground-truth grid: 1 = changed pixel, 0 = unchanged."""

    labels: np.ndarray  # (H, W) uint8 in {0, 1}

    def __post_init__(self) -> None:
        if self.labels.ndim != 2:
            raise DimensionMismatch("labels must be a 2-d grid")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("label grid entries must be 0 or 1")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class LabeledDataset:
    """Rows of 9-dimensional patterns with binary labels.

    ``coords`` maps each row back to its source pixel as (x, y); it is None
    for datasets whose rows no longer correspond to pixels (e.g. after
    synthetic over-sampling).
    """

    patterns: np.ndarray  # (n, 9) float64
    labels: np.ndarray  # (n,) int64 in {0, 1}
    coords: np.ndarray | None = None  # (n, 2) int64, (x, y)

    def __post_init__(self) -> None:
        if self.patterns.ndim != 2 or self.patterns.shape[1] != PATTERN_DIM:
            raise DimensionMismatch(f"patterns must be (n, {PATTERN_DIM})")
        if self.labels.shape != (self.patterns.shape[0],):
            raise DimensionMismatch("labels must have one entry per pattern row")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if self.coords is not None and self.coords.shape != (self.patterns.shape[0], 2):
            raise DimensionMismatch("coords must be (n, 2)")

    def __len__(self) -> int:
        return self.patterns.shape[0]

    def class_count(self, label: int) -> int:
        return int(np.count_nonzero(self.labels == label))

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        """New dataset keeping the given rows, in the given order."""
        coords = None if self.coords is None else self.coords[indices]
        return LabeledDataset(self.patterns[indices], self.labels[indices], coords)


@dataclass(frozen=True)
class FeatureScaler:
    """Per-dimension affine map (x - mean) / std fitted on training data.

    Dimensions whose training spread is zero keep divisor 1 so constant
    columns pass through as zeros.
    """

    mean: np.ndarray  # (9,)
    std: np.ndarray  # (9,), strictly positive

    def apply(self, patterns: np.ndarray) -> np.ndarray:
        return (patterns - self.mean) / self.std


def _decode(path, mode: str) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert(mode))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc


def load_image_pair(ref_path, test_path) -> ImagePair:
    """Load two 8-bit RGB PNGs as a co-registered pair.

    Raises DecodeError if either file is unreadable and DimensionMismatch
    if their sizes differ.
    """
    reference = _decode(ref_path, "RGB")
    test = _decode(test_path, "RGB")
    if reference.shape != test.shape:
        raise DimensionMismatch(
            f"{ref_path} is {reference.shape[:2]} but {test_path} is {test.shape[:2]}"
        )
    return ImagePair(reference=reference, test=test)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an RGB8 raster to CIE L*a*b* (D65 white point).

    Accepts any (..., 3) uint8 array and returns float64 of the same shape
    with L in [0, 100].
    """
    srgb = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = np.where(
        srgb > 0.04045, ((srgb + 0.055) / 1.055) ** 2.4, srgb / 12.92
    )
    xyz = linear @ _SRGB_TO_XYZ.T / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta * delta) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_difference_magnitude(lab_ref: np.ndarray, lab_test: np.ndarray) -> np.ndarray:
    """Reduce per-channel absolute L*a*b* differences to one scalar per pixel.

    The scalar is the Euclidean norm sqrt(dL^2 + da^2 + db^2), so swapping
    the two inputs leaves the result unchanged.
    """
    if lab_ref.shape != lab_test.shape:
        raise DimensionMismatch("L*a*b* rasters differ in shape")
    diff = np.abs(lab_ref - lab_test)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def difference_magnitude(pair: ImagePair) -> DifferenceImage:
    """Build the difference image of a pair: channel-wise absolute L*a*b*
    differences collapsed to a per-pixel magnitude."""
    values = lab_difference_magnitude(rgb_to_lab(pair.reference), rgb_to_lab(pair.test))
    return DifferenceImage(values=values)


def binarize_mask(mask_path) -> LabelGrid:
    """Load a ground-truth mask PNG and threshold it to {0, 1}.

    Color masks are first converted to luminance; intensity above 127 marks
    a changed pixel.
    """
    gray = _decode(mask_path, "L")
    return LabelGrid(labels=(gray > 127).astype(np.uint8))


def patterns_from_difference(diff: DifferenceImage) -> np.ndarray:
    """Flatten every pixel's 3x3 neighborhood into a 9-component row.

    Borders are replicate-padded so the pattern count equals the pixel
    count; rows are in row-major pixel order and each row is the window
    flattened row-major.
    """
    padded = np.pad(diff.values, 1, mode="edge")
    windows = sliding_window_view(padded, (3, 3))
    return windows.reshape(diff.height * diff.width, PATTERN_DIM).astype(np.float64)


def extract_patterns(diff: DifferenceImage, labels: LabelGrid) -> LabeledDataset:
    """Pair every pixel's neighborhood pattern with its mask label.

    Raises DimensionMismatch when the difference image and label grid
    disagree in size.
    """
    if (diff.height, diff.width) != (labels.height, labels.width):
        raise DimensionMismatch(
            f"difference image is {diff.height}x{diff.width} but mask is "
            f"{labels.height}x{labels.width}"
        )
    patterns = patterns_from_difference(diff)
    flat_labels = labels.labels.reshape(-1).astype(np.int64)
    idx = np.arange(patterns.shape[0])
    coords = np.stack([idx % diff.width, idx // diff.width], axis=1)
    return LabeledDataset(patterns=patterns, labels=flat_labels, coords=coords)


def split_dataset(
    data: LabeledDataset, train_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified train/test split with a seeded permutation per class.

    Each class contributes floor(train_fraction * count) samples (at least
    one) to the training set and the remainder to the test set. Raises
    InsufficientClassSamples if any class has fewer than two samples.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for label in (0, 1):
        class_idx = np.flatnonzero(data.labels == label)
        if class_idx.size < 2:
            raise InsufficientClassSamples(
                f"class {label} has {class_idx.size} samples; need at least 2 to split"
            )
        perm = rng.permutation(class_idx)
        n_train = max(1, int(np.floor(train_fraction * class_idx.size)))
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return data.subset(train), data.subset(test)


def standardize(
    train: LabeledDataset, others: Sequence[LabeledDataset] = ()
) -> tuple[LabeledDataset, list[LabeledDataset], FeatureScaler]:
    """Z-score all datasets using the training set's per-dimension statistics.

    Uses the population standard deviation; zero-spread dimensions divide by
    1 instead. Returns the standardized training set, the other sets mapped
    through the same affine transform, and the fitted scaler.
    """
    if len(train) == 0:
        raise InsufficientClassSamples("cannot standardize an empty training set")
    mean = train.patterns.mean(axis=0)
    std = train.patterns.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    scaler = FeatureScaler(mean=mean, std=std)

    def _apply(ds: LabeledDataset) -> LabeledDataset:
        return LabeledDataset(scaler.apply(ds.patterns), ds.labels, ds.coords)

    return _apply(train), [_apply(ds) for ds in others], scaler
