"""Small dense-matrix helpers shared across the package."""

from __future__ import annotations

import numpy as np


def max_abs(mat: np.ndarray) -> float:
    """Largest absolute entry; 0.0 for empty input."""
    return float(np.abs(mat).max()) if mat.size else 0.0


def frob(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """1/2 * trace norm of (rho - sigma) for Hermitian inputs."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def is_hermitian(mat: np.ndarray, tol: float) -> bool:
    return max_abs(mat - mat.conj().T) <= tol


def readonly(mat: np.ndarray) -> np.ndarray:
    """Return the array with its write flag cleared (shared, not copied)."""
    mat.flags.writeable = False
    return mat
