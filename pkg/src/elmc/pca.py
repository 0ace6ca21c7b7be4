"""Principal component analysis via SVD of the centered data matrix.

The SVD route (rather than eigendecomposition of the d x d covariance)
is chosen because d >> m in this setting. Basis column signs are fixed
so the largest-absolute entry of each column is positive, which removes
the SVD sign ambiguity and keeps fits deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PcaBasis", "fit_pca", "project", "reconstruct"]


@dataclass(frozen=True)
class PcaBasis:
    """Column mean, orthonormal basis (d x r), per-component variances."""

    mean: np.ndarray
    basis: np.ndarray
    component_variances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "component_variances",
                           np.asarray(self.component_variances, dtype=float))
        if self.basis.ndim != 2 or self.mean.ndim != 1:
            raise ValueError("basis must be 2-D and mean 1-D")
        if self.basis.shape[0] != self.mean.shape[0]:
            raise ValueError("basis rows must match mean length")
        if self.component_variances.shape != (self.basis.shape[1],):
            raise ValueError("one variance per basis column required")

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def fit_pca(M: np.ndarray, r: int) -> PcaBasis:
    """Top-r principal components of the rows of M (m x d).

    Variances use the 1/(m-1) convention, so m >= 2 is required.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    if not np.isfinite(M).all():
        raise ValueError("data contains non-finite values")
    m, d = M.shape
    if m < 2:
        raise ValueError("PCA requires at least 2 samples")
    if not (1 <= r <= min(m, d)):
        raise ValueError(f"rank must be in [1, {min(m, d)}], got {r}")
    mean = M.mean(axis=0)
    _, s, Vt = np.linalg.svd(M - mean, full_matrices=False)
    basis = Vt[:r].T.copy()
    # Deterministic sign: largest-|entry| coordinate of each column positive
    # (np.argmax already breaks ties by lowest index).
    for q in range(r):
        i = int(np.argmax(np.abs(basis[:, q])))
        if basis[i, q] < 0:
            basis[:, q] = -basis[:, q]
    variances = (s[:r] ** 2) / (m - 1)
    return PcaBasis(mean=mean, basis=basis, component_variances=variances)


def project(b: PcaBasis, M: np.ndarray) -> np.ndarray:
    """Latent coordinates Z = (M - mean) @ basis."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != b.d:
        raise ValueError(f"expected {b.d} columns, got {M.shape[1]}")
    return (M - b.mean) @ b.basis


def reconstruct(b: PcaBasis, Z: np.ndarray) -> np.ndarray:
    """Field-space reconstruction M' = Z @ basis^T + mean."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != b.rank:
        raise ValueError(f"expected {b.rank} columns, got {Z.shape[1]}")
    return Z @ b.basis.T + b.mean
