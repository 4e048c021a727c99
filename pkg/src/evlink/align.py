"""Canonical correlation analysis between paired webpage and article embeddings.

Learns a pair of linear projections mapping both sides into a shared space
where the training pairs are maximally correlated.  The solver is fully
deterministic: both within-covariances are ridge-regularized and whitened,
and the canonical directions come from one SVD of the whitened
cross-covariance.  When the requested number of dimensions exceeds what the
training data can support, fitting fails with an explicit error instead of
silently returning meaningless directions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as la

WEBPAGE_SIDE = "webpage"
ARTICLE_SIDE = "article"

DEFAULT_EPSILON = 1e-3

_MODEL_MAGIC = b"EVCC1"


class CcaConvergenceError(RuntimeError):
    """The requested canonical dimension exceeds the data's effective rank,
    so no stable alignment exists (reported downstream as ``cca_failed``)."""


@dataclass(eq=False)
class CcaModel:
    """Paired projections into d canonical dimensions, plus the training
    correlations and the centering means for each side."""

    d: int
    mean_webpage: np.ndarray
    mean_article: np.ndarray
    weights_webpage: np.ndarray   # input_dim_webpage x d
    weights_article: np.ndarray   # input_dim_article x d
    correlations: np.ndarray      # d, non-increasing
    epsilon: float

    def input_dim(self, side: str) -> int:
        return len(self.mean_webpage) if side == WEBPAGE_SIDE else len(self.mean_article)

    def save(self, path: str | Path) -> None:
        dx = len(self.mean_webpage)
        dy = len(self.mean_article)
        with Path(path).open("wb") as handle:
            handle.write(_MODEL_MAGIC)
            handle.write(struct.pack("<qqq", self.d, dx, dy))
            handle.write(struct.pack("<d", self.epsilon))
            handle.write(self.mean_webpage.astype("<f8").tobytes())
            handle.write(self.mean_article.astype("<f8").tobytes())
            handle.write(self.correlations.astype("<f8").tobytes())
            handle.write(np.ascontiguousarray(self.weights_webpage, dtype="<f8").tobytes())
            handle.write(np.ascontiguousarray(self.weights_article, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "CcaModel":
        with Path(path).open("rb") as handle:
            magic = handle.read(5)
            if magic != _MODEL_MAGIC:
                raise ValueError(f"{path}: bad magic {magic!r}, expected {_MODEL_MAGIC!r}")
            d, dx, dy = struct.unpack("<qqq", handle.read(24))
            (epsilon,) = struct.unpack("<d", handle.read(8))
            mean_webpage = np.frombuffer(handle.read(8 * dx), dtype="<f8").copy()
            mean_article = np.frombuffer(handle.read(8 * dy), dtype="<f8").copy()
            correlations = np.frombuffer(handle.read(8 * d), dtype="<f8").copy()
            weights_webpage = np.frombuffer(handle.read(8 * dx * d), dtype="<f8").reshape(dx, d).copy()
            weights_article = np.frombuffer(handle.read(8 * dy * d), dtype="<f8").reshape(dy, d).copy()
        return cls(
            d=d, mean_webpage=mean_webpage, mean_article=mean_article,
            weights_webpage=weights_webpage, weights_article=weights_article,
            correlations=correlations, epsilon=epsilon,
        )


def _effective_rank(centered: np.ndarray) -> int:
    """Numerical rank of a centered data matrix (matrix_rank convention)."""
    singular_values = la.svdvals(centered)
    if len(singular_values) == 0 or singular_values[0] == 0.0:
        return 0
    tol = singular_values[0] * max(centered.shape) * np.finfo(np.float64).eps
    return int(np.count_nonzero(singular_values > tol))


def _inverse_sqrt(covariance: np.ndarray, epsilon: float) -> np.ndarray:
    eigenvalues, eigenvectors = la.eigh(covariance + epsilon * np.eye(covariance.shape[0]))
    # Ridge keeps all eigenvalues >= epsilon > 0; clip guards against roundoff.
    eigenvalues = np.clip(eigenvalues, epsilon * 1e-6, None)
    return (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T


def fit_cca(
    webpage_rows: np.ndarray,
    article_rows: np.ndarray,
    d: int,
    epsilon: float = DEFAULT_EPSILON,
) -> CcaModel:
    """Fit CCA on paired rows (row i of each side belongs to training pair i).

    Raises :class:`CcaConvergenceError` when ``d`` exceeds the effective rank
    of either centered side, which covers both too-few training pairs
    (rank <= n - 1) and degenerate/collinear inputs.
    """
    X = np.asarray(webpage_rows, dtype=np.float64)
    Y = np.asarray(article_rows, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2:
        raise ValueError("both sides must be 2-D arrays")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"paired row counts differ: {X.shape[0]} != {Y.shape[0]}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 training pairs")

    mean_x = X.mean(axis=0)
    mean_y = Y.mean(axis=0)
    Xc = X - mean_x
    Yc = Y - mean_y

    rank_x = _effective_rank(Xc)
    rank_y = _effective_rank(Yc)
    if d > min(rank_x, rank_y):
        raise CcaConvergenceError(
            f"requested {d} canonical dimensions but the effective ranks are "
            f"{rank_x} (webpage side) and {rank_y} (article side) "
            f"over {n} training pairs"
        )

    denominator = n - 1
    cov_xx = (Xc.T @ Xc) / denominator
    cov_yy = (Yc.T @ Yc) / denominator
    cov_xy = (Xc.T @ Yc) / denominator

    isqrt_x = _inverse_sqrt(cov_xx, epsilon)
    isqrt_y = _inverse_sqrt(cov_yy, epsilon)
    left, correlations, right_t = la.svd(isqrt_x @ cov_xy @ isqrt_y, full_matrices=False)

    return CcaModel(
        d=d,
        mean_webpage=mean_x,
        mean_article=mean_y,
        weights_webpage=isqrt_x @ left[:, :d],
        weights_article=isqrt_y @ right_t[:d].T,
        correlations=correlations[:d].copy(),
        epsilon=epsilon,
    )


def project_side(model: CcaModel, side: str, rows: np.ndarray) -> np.ndarray:
    """Project one side's rows into the shared canonical space."""
    if side not in (WEBPAGE_SIDE, ARTICLE_SIDE):
        raise ValueError(f"side must be '{WEBPAGE_SIDE}' or '{ARTICLE_SIDE}', got {side!r}")
    rows = np.asarray(rows, dtype=np.float64)
    squeeze = rows.ndim == 1
    if squeeze:
        rows = rows[None, :]
    expected = model.input_dim(side)
    if rows.shape[1] != expected:
        raise ValueError(f"row dimension {rows.shape[1]} does not match fitted {expected}")
    if side == WEBPAGE_SIDE:
        out = (rows - model.mean_webpage) @ model.weights_webpage
    else:
        out = (rows - model.mean_article) @ model.weights_article
    return out[0] if squeeze else out
