"""
Dense linear-algebra helpers shared by the services
"""
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ..config import Config
from .errors import DimensionMismatch


def as_vector(values, length: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Convert to a 1-D float array, optionally checking its length"""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


def as_square(matrix, size: Optional[int] = None, name: str = "matrix") -> np.ndarray:
    """Convert to a square 2-D float array, optionally checking its size"""
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise DimensionMismatch(f"{name} is {arr.shape[0]}x{arr.shape[0]}, expected {size}x{size}")
    return arr


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy so shared results cannot be mutated"""
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def pinv_psd(matrix: np.ndarray, rcond: Optional[float] = None) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix

    Eigenvalues below rcond * largest are treated as zero.
    """
    rcond = Config.PINV_RCOND if rcond is None else rcond
    if matrix.size == 0:
        return np.zeros_like(matrix, dtype=float)
    sym = symmetrize(np.asarray(matrix, dtype=float))
    w, v = linalg.eigh(sym)
    top = np.max(np.abs(w)) if w.size else 0.0
    if top == 0.0:
        return np.zeros_like(sym)
    keep = np.abs(w) > rcond * top
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    return symmetrize((v * inv_w) @ v.T)


def condition_number(matrix: np.ndarray) -> float:
    """2-norm condition number; infinite for singular or empty input"""
    if matrix.size == 0:
        return np.inf
    s = linalg.svdvals(matrix)
    if s[-1] <= 0.0:
        return np.inf
    return float(s[0] / s[-1])


def solve_spd(matrix: np.ndarray, rhs: np.ndarray, max_cond: Optional[float] = None) -> Tuple[bool, np.ndarray]:
    """Solve a symmetric positive definite system by Cholesky

    Returns (ok, solution); ok is False when the matrix is too badly
    conditioned or not positive definite.
    """
    max_cond = Config.SINGULAR_COND if max_cond is None else max_cond
    if condition_number(matrix) > max_cond:
        return False, None
    try:
        factor = linalg.cho_factor(symmetrize(matrix), lower=True)
    except linalg.LinAlgError:
        return False, None
    return True, linalg.cho_solve(factor, rhs)


def fix_signs(vectors: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Flip columns so that each one's first entry above tol is positive"""
    tol = Config.SIGN_TOL if tol is None else tol
    out = np.array(vectors, dtype=float, copy=True)
    for col in range(out.shape[1]):
        nonzero = np.flatnonzero(np.abs(out[:, col]) > tol)
        if nonzero.size and out[nonzero[0], col] < 0:
            out[:, col] = -out[:, col]
    return out


def moore_penrose_residuals(matrix: np.ndarray, pinv: np.ndarray) -> Tuple[float, float, float, float]:
    """Max-abs residuals of the four Moore-Penrose conditions"""
    a, p = matrix, pinv
    return (
        float(np.max(np.abs(a @ p @ a - a))),
        float(np.max(np.abs(p @ a @ p - p))),
        float(np.max(np.abs((a @ p).T - a @ p))),
        float(np.max(np.abs((p @ a).T - p @ a))),
    )
