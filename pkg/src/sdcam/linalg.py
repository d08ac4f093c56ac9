"""Dense spectral factorizations and hard-thresholding kernels.

Matrices are plain two-dimensional ``numpy.ndarray`` objects of float64.
Factorization results are returned in small immutable containers so callers
can rely on the ordering conventions (singular values and eigenvalues are
always sorted nonincreasing) without re-checking them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdFactors",
    "EigFactors",
    "svd",
    "sym_eig",
    "top_k_indices",
    "hard_threshold_magnitude",
    "hard_threshold_value",
]


@dataclass(frozen=True)
class SvdFactors:
    """Economy singular value decomposition A = U @ diag(sigma) @ V.T.

    U is m-by-r, V is n-by-r and sigma has length r = min(m, n) with
    entries sorted nonincreasing and nonnegative.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class EigFactors:
    """Symmetric eigendecomposition W = Q @ diag(lam) @ Q.T.

    Q is orthogonal and lam is sorted nonincreasing.
    """

    Q: np.ndarray
    lam: np.ndarray


def _as_matrix(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def svd(A) -> SvdFactors:
    """Economy SVD with singular values sorted nonincreasing.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Matrix with finite entries.

    Returns
    -------
    SvdFactors
        Factors satisfying ``A ~= U @ diag(sigma) @ V.T`` with orthonormal
        columns in U and V.

    Raises
    ------
    ValueError
        If ``A`` is not 2-d or contains NaN/inf entries.
    """
    A = _as_matrix(A, "A")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SvdFactors(U=U, sigma=s, V=Vt.T)


def sym_eig(W) -> EigFactors:
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.

    ``W`` must be symmetric up to a 1e-12 relative tolerance in the max
    norm; it is symmetrized before factorization so roundoff-level
    asymmetry cannot leak into the factors.
    """
    W = _as_matrix(W, "W")
    if W.shape[0] != W.shape[1]:
        raise ValueError(f"W must be square, got shape {W.shape}")
    scale = max(1.0, float(np.max(np.abs(W))))
    if np.max(np.abs(W - W.T)) > 1e-12 * scale:
        raise ValueError("W is not symmetric within tolerance")
    lam, Q = np.linalg.eigh(0.5 * (W + W.T))
    # eigh returns ascending order
    return EigFactors(Q=Q[:, ::-1].copy(), lam=lam[::-1].copy())


def top_k_indices(scores, k: int) -> np.ndarray:
    """Indices of the k largest scores, ties broken toward lower indices.

    The stable sort makes the selection deterministic: among equal scores
    the entry with the smaller index is kept.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1:
        raise ValueError("scores must be 1-d")
    if k < 0:
        raise ValueError("k must be nonnegative")
    k = min(k, scores.size)
    return np.argsort(-scores, kind="stable")[:k]


def hard_threshold_magnitude(v, k: int) -> np.ndarray:
    """Keep the k entries of largest magnitude, zero out the rest."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("v must be 1-d")
    keep = top_k_indices(v * v, k)
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def hard_threshold_value(v, k: int) -> np.ndarray:
    """Keep the k largest entries by value, zero out the rest."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("v must be 1-d")
    keep = top_k_indices(v, k)
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out
