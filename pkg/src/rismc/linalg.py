"""Dense complex linear-algebra kernels used throughout the package.

All matrices are plain numpy ``complex128`` arrays in row-major order. The
functions here are pure and hold no state, so they are safe to call from
multiple threads.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .errors import DimensionError, ProjectionError, SingularMatrixError

# Relative pivot / singular-value threshold below which a matrix is treated
# as numerically singular.
SINGULAR_RTOL = 1e-14


def dft_matrix(m: int) -> np.ndarray:
    """Unitary m x m DFT matrix D with D[j,k] = exp(-2*pi*i*j*k/m)/sqrt(m).

    The matrix is symmetric (D == D.T) and its square is the index-reversal
    permutation 0 -> 0, k -> m - k.
    """
    if m < 1:
        raise DimensionError(f"DFT size must be >= 1, got {m}")
    idx = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / m) / math.sqrt(m)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with block (j, k) equal to a[j, k] * b."""
    return np.kron(np.asarray(a), np.asarray(b))


def two_dft(m_total: int) -> np.ndarray:
    """Two-dimensional DFT frame D (x) D for a square grid of m_total elements.

    m_total must be a perfect square. The result is m_total x m_total,
    unitary and symmetric.
    """
    m = math.isqrt(m_total)
    if m * m != m_total:
        raise DimensionError(f"element count must be a perfect square, got {m_total}")
    d = dft_matrix(m)
    return kron(d, d)


def reversal_permutation(m: int) -> np.ndarray:
    """Index map 0 -> 0, k -> m - k (the square of the unitary DFT)."""
    return (-np.arange(m)) % m


def pairing_indices(m_total: int) -> np.ndarray:
    """Flattened index map of the two-dimensional reversal on an m x m grid.

    Entry p*m + q maps to ((m - p) % m)*m + (m - q) % m; this is the
    permutation realized by squaring the two-dimensional DFT frame.
    """
    m = math.isqrt(m_total)
    if m * m != m_total:
        raise DimensionError(f"element count must be a perfect square, got {m_total}")
    rev = reversal_permutation(m)
    return (rev[:, None] * m + rev[None, :]).ravel()


def invert(a: np.ndarray) -> np.ndarray:
    """Inverse via partial-pivot LU.

    Raises SingularMatrixError when the smallest pivot falls below
    SINGULAR_RTOL relative to the largest entry magnitude.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"inverse requires a square matrix, got shape {a.shape}")
    scale = np.abs(a).max()
    if scale == 0.0:
        raise SingularMatrixError("zero matrix is singular")
    lu, piv = scipy.linalg.lu_factor(a)
    pivots = np.abs(np.diagonal(lu))
    if pivots.min() < SINGULAR_RTOL * scale:
        raise SingularMatrixError(
            f"matrix numerically singular (pivot {pivots.min():.3e}, scale {scale:.3e})"
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0], dtype=a.dtype))


def svd_economy(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Economy-size SVD. Returns (U, s, V) such that a = U @ diag(s) @ V^H.

    U and V have orthonormal columns; s is real, non-negative and
    non-increasing.
    """
    u, s, vh = np.linalg.svd(np.asarray(a, dtype=complex), full_matrices=False)
    return u, s, vh.conj().T


def project_unitary(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest unitary matrix to a square full-rank matrix a.

    Computed as U @ V^H from the economy SVD. A rank-deficient input makes
    the nearest unitary non-unique, so it raises ProjectionError.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"unitary projection requires a square matrix, got {a.shape}")
    u, s, v = svd_economy(a)
    if s[0] == 0.0 or s[-1] < SINGULAR_RTOL * s[0]:
        raise ProjectionError(
            f"rank-deficient input (singular values span {s[0]:.3e}..{s[-1]:.3e})"
        )
    return u @ v.conj().T


def unitarity_residual(a: np.ndarray) -> float:
    """max |a @ a^H - I|, zero for an exactly unitary matrix."""
    a = np.asarray(a)
    return float(np.abs(a @ a.conj().T - np.eye(a.shape[0])).max())
