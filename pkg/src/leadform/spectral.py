"""Numeric characteristic polynomial and spectrum utilities."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def faddeev_leverrier(A) -> np.ndarray:
    """Characteristic polynomial coefficients of ``A``, highest degree first.

    Uses the recursion ``M_k = A M_{k-1} + c_{n-k+1} I`` with
    ``c_{n-k} = -tr(A M_k) / k``; exact in rational arithmetic, and accurate
    in floating point for the small matrices this package deals with.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs + 0.0  # no negative zeros


def spectrum(A) -> np.ndarray:
    """Eigenvalues of ``A`` sorted by (real, imag).

    LAPACK balancing permutes a triangularizable pattern into triangular form
    first, so repeated poles of an acyclic closed loop come back exact.
    """
    ev = np.linalg.eigvals(np.asarray(A, dtype=float))
    return sort_complex(ev)


def sort_complex(values) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    v = np.where(np.abs(v.imag) < 1e-14, v.real + 0j, v)
    return v[np.lexsort((v.imag, v.real))]


def match_multisets(computed, expected) -> tuple[np.ndarray, float]:
    """Pair two equal-size multisets of complex numbers by minimum total distance.

    Returns the ``expected`` values reordered to line up with ``computed``
    and the largest pairwise distance.
    """
    a = np.asarray(computed, dtype=complex)
    b = np.asarray(expected, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"multiset sizes differ: {a.size} vs {b.size}")
    if a.size == 0:
        return b, 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    aligned = np.empty_like(b)
    aligned[rows] = b[cols]
    return aligned, float(cost[rows, cols].max())


def poly_from_roots(roots) -> np.ndarray:
    """Monic polynomial with the given roots, highest degree first (real part)."""
    return np.real_if_close(np.poly(np.asarray(roots, dtype=complex)), tol=1000).astype(float)
