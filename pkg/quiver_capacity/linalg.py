"""Dense symmetric / SPD matrix kernels shared by every other module.

All routines take and return float64 numpy arrays. Inputs to the SPD routines
are symmetrized as (S + S^T) / 2 before factorization, and positive
definiteness is certified by a successful Cholesky factorization.
"""

from typing import Annotated, Any, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BeforeValidator, PlainSerializer
from scipy import linalg as scipy_linalg

from quiver_capacity.errors import DimensionMismatch, NotPositiveDefinite

Matrix = NDArray[np.float64]
SpdTuple = List[Matrix]

DEFAULT_RANK_TOL = 1e-10


def as_matrix(value: Any) -> Matrix:
    """Coerce nested lists (or an array) into a read-only, finite float64 matrix."""
    array = np.array(value, dtype=np.float64)
    if array.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got an array with {array.ndim} dimension(s)")
    if not np.all(np.isfinite(array)):
        raise ValueError("Matrix entries must be finite (no NaN/Inf)")
    array.setflags(write=False)
    return array


def _matrix_to_list(value: Matrix) -> List[List[float]]:
    return np.asarray(value, dtype=np.float64).tolist()


# Field type for numpy matrices carried inside pydantic models.
MatrixField = Annotated[
    np.ndarray,
    BeforeValidator(as_matrix),
    PlainSerializer(_matrix_to_list, return_type=list),
]


def symmetrize(matrix: Matrix) -> Matrix:
    return 0.5 * (matrix + matrix.T)


def _square(matrix: Matrix, name: str = "matrix") -> Matrix:
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {array.shape}")
    return array


def cholesky(matrix: Matrix) -> Matrix:
    """
    Lower-triangular Cholesky factor L with L @ L.T == matrix.

    Raises:
        NotPositiveDefinite: If factorization fails or some pivot L_ii^2 is at most
            dim * machine-epsilon * max-diagonal.
    """
    symmetric = symmetrize(_square(matrix))
    dim = symmetric.shape[0]
    if dim == 0:
        return np.zeros((0, 0))
    if not np.all(np.isfinite(symmetric)):
        raise NotPositiveDefinite("Matrix has non-finite entries")

    try:
        lower = scipy_linalg.cholesky(symmetric, lower=True, check_finite=False)
    except scipy_linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Cholesky factorization failed for {dim}x{dim} matrix: {e}") from e

    threshold = dim * np.finfo(np.float64).eps * max(float(np.max(np.diag(symmetric))), 0.0)
    pivots = np.diag(lower) ** 2
    if float(np.min(pivots)) <= threshold:
        raise NotPositiveDefinite(
            f"Cholesky pivot {float(np.min(pivots)):.3e} below threshold {threshold:.3e} for {dim}x{dim} matrix"
        )
    return lower


def log_det(matrix: Matrix) -> float:
    """Natural log of the determinant of an SPD matrix."""
    lower = cholesky(matrix)
    return float(2.0 * np.sum(np.log(np.diag(lower))))


def spd_inverse(matrix: Matrix) -> Matrix:
    lower = cholesky(matrix)
    dim = lower.shape[0]
    inverse = scipy_linalg.cho_solve((lower, True), np.eye(dim), check_finite=False)
    return symmetrize(inverse)


def _certified_eigh(matrix: Matrix) -> Tuple[NDArray[np.float64], Matrix]:
    symmetric = symmetrize(_square(matrix))
    cholesky(symmetric)
    eigenvalues, eigenvectors = scipy_linalg.eigh(symmetric, check_finite=False)
    if eigenvalues.size and float(np.min(eigenvalues)) <= 0.0:
        raise NotPositiveDefinite(f"Smallest eigenvalue {float(np.min(eigenvalues)):.3e} is not positive")
    return eigenvalues, eigenvectors


def spd_power(matrix: Matrix, exponent: float) -> Matrix:
    """S^t through the symmetric eigendecomposition."""
    eigenvalues, eigenvectors = _certified_eigh(matrix)
    return symmetrize((eigenvectors * eigenvalues**exponent) @ eigenvectors.T)


def inv_sqrt(matrix: Matrix) -> Matrix:
    """Symmetric R with R @ S @ R == I."""
    return spd_power(matrix, -0.5)


def geometric_mean(first: Matrix, second: Matrix, weight: float) -> Matrix:
    """
    Point at parameter `weight` on the SPD geodesic from `first` (weight 0) to `second` (weight 1):
    A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}.
    """
    root = spd_power(first, 0.5)
    inverse_root = spd_power(first, -0.5)
    middle = spd_power(symmetrize(inverse_root @ second @ inverse_root), weight)
    return symmetrize(root @ middle @ root)


def rank(matrix: Matrix, tol: float = DEFAULT_RANK_TOL, scale: Optional[float] = None) -> int:
    """
    Number of singular values above tol * reference, where reference is the largest
    singular value (or `scale` when that is larger).
    """
    if tol <= 0:
        raise ValueError("rank tolerance must be positive")
    array = np.asarray(matrix, dtype=np.float64)
    if array.size == 0:
        return 0
    singular_values = np.linalg.svd(array, compute_uv=False)
    reference = max(float(singular_values[0]), float(scale or 0.0))
    if reference == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > tol * reference))


def frobenius(matrix: Matrix) -> float:
    return float(np.linalg.norm(matrix, "fro"))
