"""Imbalance-aware training-set construction.

The changed class of a change-detection ground truth is tiny next to the
unchanged class, so training sets are rebuilt at a chosen majority:minority
ratio: the minority class is grown by random duplication or SMOTE
interpolation, then the majority class is randomly under-sampled down to
the ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyClass,
    InsufficientMajority,
    SingletonClass,
    TargetExceedsAvailable,
)
from .imagery import LabeledDataset

STRATEGY_RANDOM_OVER = "randover"
STRATEGY_SMOTE = "smote"


@dataclass(frozen=True)
class ImbalanceRatio:
    """Majority:minority sample-count ratio, stored in lowest terms."""

    majority_parts: int
    minority_parts: int

    def __post_init__(self) -> None:
        if self.majority_parts < 1 or self.minority_parts < 1:
            raise ValueError("ratio parts must be positive integers")
        g = math.gcd(self.majority_parts, self.minority_parts)
        if g != 1:
            object.__setattr__(self, "majority_parts", self.majority_parts // g)
            object.__setattr__(self, "minority_parts", self.minority_parts // g)

    @classmethod
    def parse(cls, text: str) -> "ImbalanceRatio":
        """Parse the "majority:minority" notation, e.g. "10:1"."""
        parts = text.split(":")
        if len(parts) != 2:
            raise ValueError(f"imbalance ratio must look like 'A:B', got {text!r}")
        try:
            majority, minority = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"imbalance ratio parts must be integers: {text!r}") from exc
        return cls(majority, minority)

    def __str__(self) -> str:
        return f"{self.majority_parts}:{self.minority_parts}"


@dataclass(frozen=True)
class ResampleStrategy:
    """How the minority class is grown before the majority is cut down."""

    method: str = STRATEGY_SMOTE
    smote_k: int = 5  # neighbor count; ignored by random over-sampling

    def __post_init__(self) -> None:
        if self.method not in (STRATEGY_RANDOM_OVER, STRATEGY_SMOTE):
            raise ValueError(
                f"method must be '{STRATEGY_RANDOM_OVER}' or '{STRATEGY_SMOTE}'"
            )
        if self.smote_k < 1:
            raise ValueError("smote_k must be at least 1")


def random_undersample(
    data: LabeledDataset, class_label: int, target_count: int, seed: int
) -> LabeledDataset:
    """Keep a uniformly random subset of one class, leaving the other intact.

    Surviving rows retain their original order and values. Raises
    TargetExceedsAvailable when the class holds fewer than target_count rows.
    """
    class_idx = np.flatnonzero(data.labels == class_label)
    if target_count > class_idx.size:
        raise TargetExceedsAvailable(
            f"class {class_label} has {class_idx.size} samples, cannot keep {target_count}"
        )
    if target_count < 0:
        raise ValueError("target_count must be non-negative")
    rng = np.random.default_rng(seed)
    kept = rng.choice(class_idx, size=target_count, replace=False)
    other_idx = np.flatnonzero(data.labels != class_label)
    survivors = np.sort(np.concatenate([kept, other_idx]))
    return data.subset(survivors)


def random_oversample(
    data: LabeledDataset, class_label: int, target_count: int, seed: int
) -> LabeledDataset:
    """Append seeded random duplicates of one class until it reaches target_count.

    Every appended row is an exact copy of an existing row (coords included).
    Raises EmptyClass when the class has no samples to duplicate.
    """
    class_idx = np.flatnonzero(data.labels == class_label)
    if class_idx.size == 0:
        raise EmptyClass(f"class {class_label} has no samples to duplicate")
    if target_count < class_idx.size:
        raise ValueError("target_count must not shrink the class")
    n_new = target_count - class_idx.size
    if n_new == 0:
        return data
    rng = np.random.default_rng(seed)
    picks = rng.choice(class_idx, size=n_new, replace=True)
    coords = None
    if data.coords is not None:
        coords = np.concatenate([data.coords, data.coords[picks]])
    return LabeledDataset(
        patterns=np.concatenate([data.patterns, data.patterns[picks]]),
        labels=np.concatenate([data.labels, data.labels[picks]]),
        coords=coords,
    )


def _nearest_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    """Index matrix of each point's k nearest peers (self excluded).

    Distances are Euclidean on per-dimension standardized coordinates so no
    dimension dominates; ties break toward the lower index via stable sort.
    """
    std = points.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    scaled = (points - points.mean(axis=0)) / std
    sq_norms = np.sum(scaled * scaled, axis=1)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (scaled @ scaled.T)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote(
    data: LabeledDataset, class_label: int, target_count: int, k: int, seed: int
) -> LabeledDataset:
    """Grow one class to target_count with synthetic interpolated samples.

    Each synthetic row is x + t * (x' - x) for a seeded random class member
    x, one of its k nearest same-class neighbors x', and t drawn uniformly
    from [0, 1). k is clamped to class_size - 1. Synthetic rows carry no
    source pixel, so the result drops per-row coordinates.

    Raises EmptyClass / SingletonClass when the class has fewer than two
    samples to interpolate between.
    """
    class_idx = np.flatnonzero(data.labels == class_label)
    if class_idx.size == 0:
        raise EmptyClass(f"class {class_label} has no samples")
    if class_idx.size == 1:
        raise SingletonClass(f"class {class_label} has one sample; SMOTE needs two")
    if target_count < class_idx.size:
        raise ValueError("target_count must not shrink the class")
    n_new = target_count - class_idx.size
    if n_new == 0:
        return data

    members = data.patterns[class_idx]
    k_eff = min(k, class_idx.size - 1)
    neighbors = _nearest_neighbors(members, k_eff)

    rng = np.random.default_rng(seed)
    base = rng.integers(class_idx.size, size=n_new)
    pick = rng.integers(k_eff, size=n_new)
    t = rng.random(n_new)
    x = members[base]
    x_near = members[neighbors[base, pick]]
    synthetic = x + t[:, None] * (x_near - x)

    return LabeledDataset(
        patterns=np.concatenate([data.patterns, synthetic]),
        labels=np.concatenate([data.labels, np.full(n_new, class_label, dtype=np.int64)]),
        coords=None,
    )


def rebalance(
    data: LabeledDataset,
    ir: ImbalanceRatio,
    strategy: ResampleStrategy,
    minority_target: int,
    seed: int,
) -> LabeledDataset:
    """Rebuild a training set at the requested majority:minority ratio.

    The minority class (label 1) is first grown to
    m = max(minority_target, current minority count) using the strategy's
    over-sampler, then the majority class (label 0) is under-sampled to
    floor(m * majority_parts / minority_parts). Raises InsufficientMajority
    when the majority class cannot supply that many samples.
    """
    if minority_target < 2:
        raise ValueError("minority_target must be at least 2")
    n_minority = data.class_count(1)
    n_majority = data.class_count(0)
    if n_minority == 0 or n_majority == 0:
        raise EmptyClass("rebalance needs samples from both classes")

    m = max(minority_target, n_minority)
    majority_target = (m * ir.majority_parts) // ir.minority_parts
    if majority_target > n_majority:
        raise InsufficientMajority(
            f"ratio {ir} with minority size {m} needs {majority_target} majority "
            f"samples but only {n_majority} are available"
        )

    rng = np.random.default_rng(seed)
    grow_seed, cut_seed = (int(s) for s in rng.integers(2**31, size=2))
    if strategy.method == STRATEGY_SMOTE:
        grown = smote(data, 1, m, strategy.smote_k, grow_seed)
    else:
        grown = random_oversample(data, 1, m, grow_seed)
    return random_undersample(grown, 0, majority_target, cut_seed)
