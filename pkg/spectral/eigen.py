"""Cyclic Jacobi eigensolver for small dense symmetric matrices."""
from __future__ import annotations

import logging
import math

import numpy as np
import numpy.typing as npt

from corpus.errors import DegenerateInputError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
CONVERGENCE_TOL = 1e-12
MAX_SWEEPS = 100


def jacobi_eigh(
    matrix: npt.ArrayLike, tol: float = CONVERGENCE_TOL, max_sweeps: int = MAX_SWEEPS
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below tol * ||A||_F.
    Returns unsorted eigenvalues and the accumulated rotation (columns = vectors).
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DegenerateInputError(f"jacobi_eigh: expected a square matrix, got {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if a.size and float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL * scale:
        raise DegenerateInputError("jacobi_eigh: matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return np.zeros(n), v

    for _ in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        logger.warning("jacobi_eigh: no convergence after %d sweeps", max_sweeps)

    return np.diag(a).copy(), v


def canonicalize_signs(vectors: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Flip each column so its largest-magnitude entry (lowest index on ties) is >= 0."""
    u = np.array(vectors, dtype=np.float64)
    for k in range(u.shape[1]):
        lead = int(np.argmax(np.abs(u[:, k])))
        if u[lead, k] < 0.0:
            u[:, k] = -u[:, k]
    return u


def eigendecompose(
    laplacian: npt.ArrayLike,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Ascending eigenvalues with orthonormal, sign-canonical eigenvectors."""
    values, vectors = jacobi_eigh(laplacian)
    order = np.argsort(values, kind="stable")
    return values[order], canonicalize_signs(vectors[:, order])
