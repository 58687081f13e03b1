"""Dense symmetric linear algebra and squared-distance order statistics.

Plain numpy arrays are used throughout; :class:`SpdMatrix` wraps a known
scatter matrix with validation and cached factorizations so the same matrix
can be reused across many distance evaluations without refactorizing.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DimensionMismatch",
    "NotSPD",
    "NotSymmetric",
    "SpdMatrix",
    "as_vector",
    "as_data_matrix",
    "cholesky",
    "sym_eigenvalues",
    "mahalanobis_sq",
    "mahalanobis_sq_many",
    "empirical_quantile_sq_distance",
    "trim_count",
]

#: relative tolerance for the symmetry check at construction
SYMMETRY_RTOL = 1e-12


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class NotSymmetric(ValueError):
    """Matrix is not symmetric to within tolerance."""


class NotSPD(ValueError):
    """Matrix is symmetric but not positive definite."""


def as_vector(x: ArrayLike, name: str = "vector") -> NDArray[np.float64]:
    """Validate and return a finite 1-d float array."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"{name} must be a nonempty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_data_matrix(x: ArrayLike, name: str = "data") -> NDArray[np.float64]:
    """Validate and return a finite (n, d) float array with n >= 1."""
    m = np.asarray(x, dtype=float)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a nonempty (n, d) array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


class SpdMatrix:
    """A validated symmetric positive definite matrix with cached factorizations.

    Validation happens once at construction: symmetry to relative tolerance
    ``SYMMETRY_RTOL`` and positive definiteness via a Cholesky attempt.  The
    cached properties are derived data, so instances should be treated as
    immutable after construction.
    """

    def __init__(self, entries: ArrayLike):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
            raise NotSymmetric("matrix is not symmetric to within 1e-12 relative")
        # exact symmetry simplifies everything downstream
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self._a = a
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise NotSPD("matrix is not positive definite") from None
        chol.setflags(write=False)
        self._chol = chol

    @classmethod
    def identity(cls, d: int) -> "SpdMatrix":
        return cls(np.eye(d))

    @property
    def d(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> NDArray[np.float64]:
        return self._a

    @property
    def cholesky_factor(self) -> NDArray[np.float64]:
        """Lower-triangular L with L L' equal to the matrix."""
        return self._chol

    @cached_property
    def inverse(self) -> NDArray[np.float64]:
        linv = np.linalg.inv(self._chol)
        inv = linv.T @ linv
        inv = 0.5 * (inv + inv.T)
        inv.setflags(write=False)
        return inv

    @cached_property
    def eigenvalues(self) -> NDArray[np.float64]:
        """Eigenvalues in descending order (all positive)."""
        vals = np.linalg.eigvalsh(self._a)[::-1].copy()
        vals.setflags(write=False)
        return vals

    @cached_property
    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    @cached_property
    def det(self) -> float:
        return math.exp(self.log_det)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self._a, np.eye(self.d)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"SpdMatrix(d={self.d})"


def _as_spd(sigma: ArrayLike | SpdMatrix) -> SpdMatrix:
    return sigma if isinstance(sigma, SpdMatrix) else SpdMatrix(sigma)


def cholesky(matrix: ArrayLike | SpdMatrix) -> NDArray[np.float64]:
    """Lower-triangular Cholesky factor; raises NotSPD/NotSymmetric if invalid."""
    return _as_spd(matrix).cholesky_factor


def sym_eigenvalues(matrix: ArrayLike | SpdMatrix) -> NDArray[np.float64]:
    """Eigenvalues of a symmetric positive definite matrix, descending."""
    return _as_spd(matrix).eigenvalues


def mahalanobis_sq(
    y: ArrayLike, mu0: ArrayLike, sigma_inv: ArrayLike | SpdMatrix
) -> float:
    """Squared distance (y - mu0)' Sigma^{-1} (y - mu0) given the inverse."""
    yv = as_vector(y, "y")
    mv = as_vector(mu0, "mu0")
    if yv.shape != mv.shape:
        raise DimensionMismatch("y and mu0 have different lengths")
    inv = sigma_inv.entries if isinstance(sigma_inv, SpdMatrix) else np.asarray(sigma_inv, dtype=float)
    if inv.shape != (yv.size, yv.size):
        raise DimensionMismatch("sigma_inv has incompatible shape")
    diff = yv - mv
    return float(diff @ inv @ diff)


def mahalanobis_sq_many(
    data: ArrayLike, mu0: ArrayLike, sigma: SpdMatrix
) -> NDArray[np.float64]:
    """Squared distances of the rows of ``data`` (shape (..., d)) from mu0.

    Works on any leading batch shape; uses the cached inverse of ``sigma``.
    """
    arr = np.asarray(data, dtype=float)
    mu = as_vector(mu0, "mu0")
    if arr.shape[-1] != mu.size or sigma.d != mu.size:
        raise DimensionMismatch("data, mu0 and sigma dimensions disagree")
    diff = arr - mu
    if sigma.is_identity:
        return np.einsum("...i,...i->...", diff, diff)
    return np.einsum("...i,ij,...j->...", diff, sigma.inverse, diff)


def trim_count(n: int, gamma: float) -> int:
    """Number of retained observations: floor(n * gamma), clamped to >= 1."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if n < 1:
        raise ValueError("n must be positive")
    return max(1, math.floor(n * gamma))


def empirical_quantile_sq_distance(distances: ArrayLike, gamma: float) -> float:
    """The m-th smallest of the given squared distances, m = floor(n*gamma) >= 1.

    Ties are resolved by value (equal values give the same threshold); the
    caller keeps observations with distance <= the returned value.
    """
    d = as_vector(distances, "distances")
    if np.any(d < 0):
        raise ValueError("squared distances must be nonnegative")
    m = trim_count(d.size, gamma)
    return float(np.sort(d, kind="stable")[m - 1])
