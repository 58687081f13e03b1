"""Location estimators: trimmed forward-search mean and three competitors.

The forward-search estimator averages the floor(n * gamma) observations
closest to the hypothesized location in squared Mahalanobis distance.  It is
a single trimming step anchored at the hypothesized point; no iteration or
re-anchoring is performed.  The competitors are the sample mean, the
coordinate-wise median, and the coordinate-wise Hodges-Lehmann estimator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .linalg import (
    DimensionMismatch,
    SpdMatrix,
    as_data_matrix,
    as_vector,
    mahalanobis_sq_many,
    trim_count,
)

__all__ = [
    "EstimatorKind",
    "Estimate",
    "ForwardSearchConfig",
    "forward_search",
    "sample_mean",
    "cw_median",
    "hodges_lehmann",
    "estimate",
]


class EstimatorKind(str, enum.Enum):
    FORWARD_SEARCH = "forward_search"
    MEAN = "mean"
    CW_MEDIAN = "cw_median"
    HODGES_LEHMANN = "hodges_lehmann"


@dataclass(frozen=True)
class ForwardSearchConfig:
    """Anchor, scatter and retention fraction for the forward-search step."""

    mu0: NDArray[np.float64]
    sigma: SpdMatrix
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "mu0", as_vector(self.mu0, "mu0"))
        if not isinstance(self.sigma, SpdMatrix):
            object.__setattr__(self, "sigma", SpdMatrix(self.sigma))
        if self.sigma.d != self.mu0.size:
            raise DimensionMismatch("mu0 and sigma dimensions disagree")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class Estimate:
    """A location estimate together with how it was produced."""

    kind: EstimatorKind
    value: NDArray[np.float64]
    n: int
    n_used: int
    gamma: float | None = None


def forward_search(data: ArrayLike, config: ForwardSearchConfig) -> Estimate:
    """Mean of the floor(n * gamma) observations nearest the anchor.

    Distances are squared Mahalanobis distances from ``config.mu0`` under
    ``config.sigma``.  Ties at the retention boundary are resolved by input
    order (stable sort), and at least one observation is always retained.
    With gamma = 1 the result equals the sample mean.
    """
    x = as_data_matrix(data)
    if x.shape[1] != config.mu0.size:
        raise DimensionMismatch("data and mu0 dimensions disagree")
    n = x.shape[0]
    m = trim_count(n, config.gamma)
    if m == n:
        kept = np.arange(n)
    else:
        dist = mahalanobis_sq_many(x, config.mu0, config.sigma)
        kept = np.sort(np.argsort(dist, kind="stable")[:m])
    value = x[kept].mean(axis=0)
    return Estimate(EstimatorKind.FORWARD_SEARCH, value, n, m, config.gamma)


def sample_mean(data: ArrayLike) -> Estimate:
    x = as_data_matrix(data)
    return Estimate(EstimatorKind.MEAN, x.mean(axis=0), x.shape[0], x.shape[0])


def cw_median(data: ArrayLike) -> Estimate:
    """Coordinate-wise median (average of the two middle values for even n)."""
    x = as_data_matrix(data)
    return Estimate(EstimatorKind.CW_MEDIAN, np.median(x, axis=0), x.shape[0], x.shape[0])


def hodges_lehmann(data: ArrayLike) -> Estimate:
    """Coordinate-wise median of all n(n+1)/2 pairwise averages (i <= j)."""
    x = as_data_matrix(data)
    value = _hodges_lehmann_batch(x[None, :, :])[0]
    return Estimate(EstimatorKind.HODGES_LEHMANN, value, x.shape[0], x.shape[0])


def estimate(
    kind: EstimatorKind, data: ArrayLike, config: ForwardSearchConfig | None = None
) -> Estimate:
    """Dispatch on the estimator kind; ``config`` is required for forward search."""
    if kind == EstimatorKind.FORWARD_SEARCH:
        if config is None:
            raise ValueError("forward search requires a ForwardSearchConfig")
        return forward_search(data, config)
    if kind == EstimatorKind.MEAN:
        return sample_mean(data)
    if kind == EstimatorKind.CW_MEDIAN:
        return cw_median(data)
    if kind == EstimatorKind.HODGES_LEHMANN:
        return hodges_lehmann(data)
    raise ValueError(f"unknown estimator kind {kind!r}")


# ---------------------------------------------------------------------------
# batched implementations used by the simulation engine
# ---------------------------------------------------------------------------

#: soft cap on the number of scratch floats per Hodges-Lehmann chunk
_HL_CHUNK_BUDGET = 4_000_000


def _mean_batch(data: NDArray[np.float64]) -> NDArray[np.float64]:
    return data.mean(axis=1)


def _cw_median_batch(data: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.median(data, axis=1)


def _hodges_lehmann_batch(data: NDArray[np.float64]) -> NDArray[np.float64]:
    """Hodges-Lehmann per replication for a (reps, n, d) batch."""
    reps, n, d = data.shape
    i_idx, j_idx = np.triu_indices(n)
    chunk = max(1, _HL_CHUNK_BUDGET // (i_idx.size * d))
    out = np.empty((reps, d))
    for start in range(0, reps, chunk):
        block = data[start : start + chunk]
        walsh = 0.5 * (block[:, i_idx, :] + block[:, j_idx, :])
        out[start : start + chunk] = np.median(walsh, axis=1)
    return out


def _forward_search_batch(
    data: NDArray[np.float64],
    mu0: NDArray[np.float64],
    sigma: SpdMatrix,
    gamma: float,
) -> NDArray[np.float64]:
    """Forward-search estimate per replication for a (reps, n, d) batch.

    Assumes continuously distributed data (boundary ties have probability
    zero), so an unstable partial sort is used for speed.
    """
    reps, n, d = data.shape
    m = trim_count(n, gamma)
    if m == n:
        return data.mean(axis=1)
    dist = mahalanobis_sq_many(data, mu0, sigma)
    kept = np.argpartition(dist, m - 1, axis=1)[:, :m]
    rows = np.take_along_axis(data, kept[:, :, None], axis=1)
    return rows.mean(axis=1)


def batch_estimates(
    kind: EstimatorKind,
    data: NDArray[np.float64],
    mu0: NDArray[np.float64] | None = None,
    sigma: SpdMatrix | None = None,
    gamma: float | None = None,
) -> NDArray[np.float64]:
    """Estimator values for a (reps, n, d) batch, shape (reps, d)."""
    if kind == EstimatorKind.FORWARD_SEARCH:
        if mu0 is None or sigma is None or gamma is None:
            raise ValueError("forward search needs mu0, sigma and gamma")
        return _forward_search_batch(data, mu0, sigma, gamma)
    if kind == EstimatorKind.MEAN:
        return _mean_batch(data)
    if kind == EstimatorKind.CW_MEDIAN:
        return _cw_median_batch(data)
    if kind == EstimatorKind.HODGES_LEHMANN:
        return _hodges_lehmann_batch(data)
    raise ValueError(f"unknown estimator kind {kind!r}")
