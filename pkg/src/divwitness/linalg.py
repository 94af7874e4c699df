"""Dense complex linear-algebra primitives used by every other module.

Matrices are plain numpy arrays (complex128, row-major).  All public
tolerances are relative to the Frobenius norm with an absolute floor of
1e-12.
"""

from __future__ import annotations

import numpy as np
import numpy.linalg as npl

from .errors import DimensionMismatchError, NumericalFailureError

ABS_FLOOR = 1e-12
HERM_RTOL = 1e-10
EIG_RTOL = 1e-9

MAX_DIM = 256


def frob(m: np.ndarray) -> float:
    """Frobenius norm."""
    return float(npl.norm(m))


def rel_tol(m: np.ndarray, rtol: float) -> float:
    """Relative tolerance with absolute floor."""
    return max(rtol * max(1.0, frob(m)), ABS_FLOOR)


def hermitianize(m: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (M + M†)/2."""
    return (m + m.conj().T) / 2


def herm_defect(m: np.ndarray) -> float:
    """||M - M†||_F, the deviation from Hermiticity."""
    return frob(m - m.conj().T)


def is_hermitian(m: np.ndarray, rtol: float = HERM_RTOL) -> bool:
    return m.shape[0] == m.shape[1] and herm_defect(m) <= rel_tol(m, rtol)


def check_square(m: np.ndarray) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def check_finite(m: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise NumericalFailureError("matrix contains non-finite entries")
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(m: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one tensor factor of a (d1*d2)-dimensional operator.

    `dims = (d1, d2)` is the factorization (first factor ⊗ second factor);
    `keep` is the index (0 or 1) of the subsystem that survives.  The trace
    of the result equals the trace of the input.
    """
    d1, d2 = dims
    n = check_square(np.asarray(m))
    if n != d1 * d2:
        raise DimensionMismatchError(f"matrix dim {n} != {d1}*{d2}")
    if keep not in (0, 1):
        raise DimensionMismatchError(f"keep must be 0 or 1, got {keep}")
    t = np.asarray(m, dtype=complex).reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    return np.einsum("kikj->ij", t)


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a Hermitian operator.

    Returns eigenvalues in ascending order and the matrix of orthonormal
    eigenvectors (columns).  No ordering guarantee inside a degenerate
    cluster.
    """
    h = np.asarray(h, dtype=complex)
    n = check_square(h)
    if n > MAX_DIM:
        raise DimensionMismatchError(f"dimension {n} exceeds the {MAX_DIM} cap")
    if not is_hermitian(h):
        raise DimensionMismatchError(
            f"matrix is not Hermitian within tolerance (defect {herm_defect(h):.3e})"
        )
    try:
        w, v = npl.eigh(hermitianize(h))
    except npl.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NumericalFailureError(f"eigensolver did not converge: {exc}")
    return w, v


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=complex)
    check_square(m)
    return float(np.sum(npl.svd(m, compute_uv=False)))


def psd_project(h: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite operator: clip negative
    eigenvalues at zero."""
    w, v = eig_hermitian(h)
    w = np.maximum(w, 0.0)
    return hermitianize((v * w) @ v.conj().T)


def min_eigval(h: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part."""
    return float(npl.eigvalsh(hermitianize(np.asarray(h, dtype=complex)))[0])
