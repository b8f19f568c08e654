"""Numerical kernels: ridge pseudo-inverse solve and a sparse linear autoencoder.

Output weights of the broad classifier are solved in closed form through
ridge-regularized normal equations; new enhancement-layer weights come from
a linear autoencoder trained by proximal gradient descent under an L1
penalty on the encoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonFiniteInput, SingularSystem

# Tiny Tikhonov term keeping the decoder solve well-posed when encoder
# columns collapse to zero under the L1 penalty.
_DECODER_RIDGE = 1e-8


@dataclass(frozen=True)
class SparseAutoencoderConfig:
    """Knobs for the sparse-autoencoder training loop."""

    l1_weight: float = 1e-3
    max_iterations: int = 100
    step_tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.step_tolerance <= 0:
            raise ValueError("step_tolerance must be positive")


def _check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteInput(f"{name} contains NaN or infinity")
    return arr


def ridge_pseudoinverse_solve(
    A: np.ndarray, Y: np.ndarray, ridge_lambda: float = 1e-6
) -> np.ndarray:
    """Solve W = (A^T A + lambda I)^-1 A^T Y via SPD factorization.

    For lambda -> 0 on full-column-rank A this is the least-squares
    pseudo-inverse solution. Raises SingularSystem when lambda is 0 and the
    normal equations are numerically singular.
    """
    A = _check_finite("A", A)
    Y = _check_finite("Y", Y)
    if A.ndim != 2 or Y.ndim != 2:
        raise DimensionMismatch("A and Y must be 2-d matrices")
    if A.shape[0] != Y.shape[0]:
        raise DimensionMismatch(
            f"A has {A.shape[0]} rows but Y has {Y.shape[0]}"
        )
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be non-negative")
    gram = A.T @ A
    if ridge_lambda > 0:
        gram = gram + ridge_lambda * np.eye(A.shape[1])
    rhs = A.T @ Y
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(
            "normal equations are singular; pass a positive ridge_lambda"
        ) from exc
    # LAPACK hands back Fortran-ordered solutions; keep everything C-ordered
    # so a model reloaded from disk multiplies out bit-identically.
    return np.ascontiguousarray(scipy.linalg.cho_solve(factor, rhs))


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    """Elementwise shrink-toward-zero by the given amount."""
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def _largest_eigenvalue(sym: np.ndarray, iterations: int = 100) -> float:
    """Power-iteration estimate of the largest eigenvalue of a PSD matrix."""
    d = sym.shape[0]
    v = np.full(d, 1.0 / np.sqrt(d))
    lam = 0.0
    for _ in range(iterations):
        w = sym @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        if abs(norm - lam) <= 1e-12 * max(norm, 1.0):
            return norm
        lam = norm
        v = w / norm
    return lam


def _reconstruction_objective(
    X: np.ndarray, W: np.ndarray, V: np.ndarray, l1_weight: float
) -> float:
    residual = X @ W @ V - X
    return float(np.sum(residual * residual) + l1_weight * np.sum(np.abs(W)))


def train_sparse_autoencoder(
    X: np.ndarray,
    out_dim: int,
    cfg: SparseAutoencoderConfig,
    history: list | None = None,
) -> np.ndarray:
    """Train a linear autoencoder with an L1-sparse encoder; return the encoder.

    Minimizes ||X W V - X||_F^2 + l1_weight * ||W||_1 by alternating a ridge
    solve for the decoder V with a proximal-gradient (soft-threshold) step on
    the encoder W. The step size comes from a power-iteration Lipschitz
    estimate and is backtracked whenever it would increase the objective, so
    the objective is non-increasing across accepted iterates. Stops when the
    relative objective change drops below cfg.step_tolerance or after
    cfg.max_iterations.

    When ``history`` is a list, every accepted (encoder, decoder) pair is
    appended to it, initial state included.
    """
    X = _check_finite("X", X)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionMismatch("X must be a non-empty 2-d matrix")
    if out_dim < 1:
        raise ValueError("out_dim must be at least 1")

    rng = np.random.default_rng(cfg.seed)
    d = X.shape[1]
    W = rng.uniform(-1.0, 1.0, size=(d, out_dim))
    V = ridge_pseudoinverse_solve(X @ W, X, _DECODER_RIDGE)
    objective = _reconstruction_objective(X, W, V, cfg.l1_weight)
    if history is not None:
        history.append((W.copy(), V.copy()))

    gram = X.T @ X
    lip_x = _largest_eigenvalue(gram)

    for _ in range(cfg.max_iterations):
        lip = 2.0 * lip_x * _largest_eigenvalue(V @ V.T)
        step = 1.0 / max(lip, 1e-12)
        gradient = 2.0 * X.T @ (X @ W @ V - X) @ V.T

        accepted = False
        for _ in range(30):
            W_new = soft_threshold(W - step * gradient, step * cfg.l1_weight)
            V_new = ridge_pseudoinverse_solve(X @ W_new, X, _DECODER_RIDGE)
            candidate = _reconstruction_objective(X, W_new, V_new, cfg.l1_weight)
            if candidate <= objective + 1e-12 * max(objective, 1.0):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        drop = objective - candidate
        W, V = W_new, V_new
        objective = candidate
        if history is not None:
            history.append((W.copy(), V.copy()))
        if drop < cfg.step_tolerance * max(objective, 1e-300):
            break

    return W


def enhance(X: np.ndarray, W_enc: np.ndarray) -> np.ndarray:
    """Enhancement-node activations: elementwise tanh of X @ W_enc."""
    X = np.asarray(X, dtype=np.float64)
    W_enc = np.asarray(W_enc, dtype=np.float64)
    if X.ndim != 2 or W_enc.ndim != 2 or X.shape[1] != W_enc.shape[0]:
        raise DimensionMismatch(
            f"cannot multiply {X.shape} by {W_enc.shape}"
        )
    return np.tanh(X @ W_enc)


def concat_columns(blocks: list[np.ndarray]) -> np.ndarray:
    """Horizontally concatenate matrices sharing a row count, in order."""
    if not blocks:
        raise ValueError("need at least one block")
    rows = blocks[0].shape[0]
    for block in blocks:
        if block.ndim != 2 or block.shape[0] != rows:
            raise DimensionMismatch("all blocks must share the same row count")
    return np.concatenate(blocks, axis=1)
