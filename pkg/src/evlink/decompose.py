"""Randomized truncated SVD of sparse document-term matrices.

Uses Gaussian range finding with QR-stabilized power iterations, so the
top-k factors of a large sparse matrix are recovered without ever forming
a dense decomposition.  Fitting is deterministic for a fixed seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .vectorspace import SparseVector, to_csr

DEFAULT_N_ITER = 7
DEFAULT_OVERSAMPLE = 10

_MODEL_MAGIC = b"EVTS1"


class DegenerateMatrixError(ValueError):
    """The input matrix has no signal to decompose (all zeros)."""


@dataclass(eq=False)
class TsvdModel:
    """Top-k factors: orthonormal right singular vectors and singular values."""

    k: int
    components: np.ndarray        # k x dim, orthonormal rows
    singular_values: np.ndarray   # k, non-increasing, >= 0
    seed: int
    n_iter: int

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    def save(self, path: str | Path) -> None:
        with Path(path).open("wb") as handle:
            handle.write(_MODEL_MAGIC)
            handle.write(struct.pack("<qqqq", self.k, self.dim, self.seed, self.n_iter))
            handle.write(self.singular_values.astype("<f8").tobytes())
            handle.write(np.ascontiguousarray(self.components, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "TsvdModel":
        with Path(path).open("rb") as handle:
            magic = handle.read(5)
            if magic != _MODEL_MAGIC:
                raise ValueError(f"{path}: bad magic {magic!r}, expected {_MODEL_MAGIC!r}")
            k, dim, seed, n_iter = struct.unpack("<qqqq", handle.read(32))
            singular_values = np.frombuffer(handle.read(8 * k), dtype="<f8").copy()
            components = np.frombuffer(handle.read(8 * k * dim), dtype="<f8").reshape(k, dim).copy()
        return cls(
            k=k, components=components, singular_values=singular_values,
            seed=seed, n_iter=n_iter,
        )


def _as_matrix(matrix) -> sp.csr_matrix:
    if sp.issparse(matrix):
        return matrix.tocsr()
    if isinstance(matrix, np.ndarray):
        return sp.csr_matrix(matrix)
    return to_csr(list(matrix))


def fit_tsvd(
    matrix: "sp.spmatrix | np.ndarray | list[SparseVector]",
    k: int,
    seed: int,
    n_iter: int = DEFAULT_N_ITER,
    oversample: int = DEFAULT_OVERSAMPLE,
) -> TsvdModel:
    """Fit the top-k truncated SVD by randomized range finding.

    The sketch width is ``k + oversample`` (capped at the matrix rank bound)
    and each of the ``n_iter`` power iterations is re-orthonormalized by QR
    to keep the subspace numerically clean.
    """
    csr = _as_matrix(matrix)
    n_rows, dim = csr.shape
    if n_rows == 0 or dim == 0:
        raise ValueError("matrix must be non-empty")
    if not 1 <= k <= min(n_rows, dim):
        raise ValueError(f"k must be in [1, {min(n_rows, dim)}], got {k}")
    if csr.nnz == 0 or not np.any(csr.data):
        raise DegenerateMatrixError("cannot decompose an all-zero matrix")

    rng = np.random.default_rng(seed)
    sketch = min(k + oversample, min(n_rows, dim))
    test_matrix = rng.standard_normal((dim, sketch))
    basis, _ = la.qr(csr @ test_matrix, mode="economic")
    for _ in range(n_iter):
        projected, _ = la.qr(csr.T @ basis, mode="economic")
        basis, _ = la.qr(csr @ projected, mode="economic")

    small = (csr.T @ basis).T  # sketch x dim, dense
    _, singular_values, right_vectors = la.svd(small, full_matrices=False)
    return TsvdModel(
        k=k,
        components=np.ascontiguousarray(right_vectors[:k]),
        singular_values=singular_values[:k].copy(),
        seed=seed,
        n_iter=n_iter,
    )


def project(
    model: TsvdModel,
    vectors: "sp.spmatrix | np.ndarray | list[SparseVector]",
) -> np.ndarray:
    """Map document vectors into the fitted k-dimensional latent space."""
    csr = _as_matrix(vectors)
    if csr.shape[1] != model.dim:
        raise ValueError(
            f"vector dimension {csr.shape[1]} does not match model dimension {model.dim}"
        )
    return np.asarray(csr @ model.components.T)


def reconstruction_error(
    model: TsvdModel,
    matrix: "sp.spmatrix | np.ndarray | list[SparseVector]",
) -> float:
    """Frobenius norm of the rank-k reconstruction residual.

    Computed as sqrt(||A||_F^2 - ||A V_k||_F^2), which never materializes
    the dense reconstruction.
    """
    csr = _as_matrix(matrix)
    embedded = project(model, csr)
    total = float((csr.multiply(csr)).sum())
    captured = float(np.sum(embedded * embedded))
    return float(np.sqrt(max(total - captured, 0.0)))


def explained_variance(
    model: TsvdModel,
    matrix: "sp.spmatrix | np.ndarray | list[SparseVector]",
) -> float:
    """Fraction of the matrix's squared Frobenius norm captured by the
    fitted singular values."""
    csr = _as_matrix(matrix)
    total = float((csr.multiply(csr)).sum())
    if total == 0.0:
        raise DegenerateMatrixError("all-zero matrix has no variance to explain")
    return float(np.sum(model.singular_values**2) / total)
