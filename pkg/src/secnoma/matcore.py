"""Small dense real-matrix kernels: symmetric eigendecomposition, base-2
log-determinants, PSD projection, and the vec/trace helpers the rest of the
package builds on. Dimensions are tiny (<= 16), so robustness wins over
asymptotic speed throughout.
"""

from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import NotPositiveDefiniteError

MAX_DIM = 16

PD_MIN_EIG = 1e-12


class EigPair(NamedTuple):
    values: np.ndarray   # descending
    vectors: np.ndarray  # orthonormal columns


def symmetrize(a) -> np.ndarray:
    """Return the symmetric part (A + A^T)/2 as a float64 array."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def _check_sym(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds supported max {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return symmetrize(a)


def sym_eig(a) -> EigPair:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back descending; eigenvectors are orthonormal columns
    satisfying V diag(w) V^T == A (up to roundoff).
    """
    a = _check_sym(a)
    w, v = kernels.sym_eigh(np.ascontiguousarray(a))
    return EigPair(values=w, vectors=v)


def logdet_pd(a) -> float:
    """log2 det(A) for positive definite A (min eigenvalue > 1e-12)."""
    a = np.ascontiguousarray(_check_sym(a))
    w, _ = kernels.sym_eigh(a)
    if w[-1] <= PD_MIN_EIG:
        raise NotPositiveDefiniteError(w[-1])
    val, ok = kernels.logdet2_pd(a)
    if not ok:
        raise NotPositiveDefiniteError(w[-1])
    return float(val)


def project_psd(a, trace_budget: float) -> np.ndarray:
    """Nearest-in-spirit feasible repair: clip negative eigenvalues to zero,
    then scale uniformly when the trace exceeds the budget. A PSD input
    within budget is returned unchanged. Idempotent.
    """
    if trace_budget < 0:
        raise ValueError(f"trace_budget must be >= 0, got {trace_budget}")
    a = _check_sym(a)
    return kernels.project_psd(np.ascontiguousarray(a), float(trace_budget))


def min_eigenvalue(a) -> float:
    a = _check_sym(a)
    w, _ = kernels.sym_eigh(np.ascontiguousarray(a))
    return float(w[-1])


def is_psd(a, tol: float = 1e-9) -> bool:
    return min_eigenvalue(a) >= -tol
