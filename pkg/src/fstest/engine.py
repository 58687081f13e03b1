"""Location tests: statistics, limiting weights, calibration, power campaigns.

Each test statistic is ``n * ||estimate - mu0||^2`` for one of the four
location estimators.  Under the null the statistics converge to weighted
chi-squared laws ``sum_i lambda_i * Z_i^2``; the weights are eigenvalues of a
scalar multiple of the scatter matrix, with the scalar depending on the
estimator and the radial kernel.  Critical values come either from that
limit (``formula`` calibration, Monte Carlo quantile of the weighted sum) or
from parametric simulation of the statistic under the null (``empirical``
calibration).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import estimators as est
from .elliptical import (
    DivergentIntegral,
    EllipticalModel,
    MixtureModel,
    component_variance,
    generator_by_name,
    marginal_density_at_zero,
    marginal_density_sq_integral,
    radial_integral,
    sample_mixture,
)
from .estimators import EstimatorKind, ForwardSearchConfig
from .linalg import DimensionMismatch, SpdMatrix, as_data_matrix, as_vector
from .rng import parallel_map, replication_slices, stream_rng

__all__ = [
    "InfiniteVariance",
    "StatKind",
    "LimitSpec",
    "VarianceConstants",
    "variance_constants",
    "MonteCarloQuantile",
    "MonteCarloConfig",
    "TestReport",
    "statistic",
    "batch_statistics",
    "limit_weights",
    "weighted_chisq_sample",
    "critical_value",
    "empirical_critical_value",
    "run_test",
    "power_table",
    "power_curve",
    "bootstrap_p_value",
    "bootstrap_report",
    "DEFAULT_SHIFT_SCALE",
]


class InfiniteVariance(ArithmeticError):
    """A limiting variance needed for calibration is infinite."""


class StatKind(str, enum.Enum):
    """The four test statistics, indexed by their estimator."""

    T1 = "t1"  # forward-search trimmed mean
    T2 = "t2"  # sample mean
    T3 = "t3"  # coordinate-wise median
    T4 = "t4"  # Hodges-Lehmann

    @property
    def estimator(self) -> EstimatorKind:
        return _STAT_TO_ESTIMATOR[self]


_STAT_TO_ESTIMATOR = {
    StatKind.T1: EstimatorKind.FORWARD_SEARCH,
    StatKind.T2: EstimatorKind.MEAN,
    StatKind.T3: EstimatorKind.CW_MEDIAN,
    StatKind.T4: EstimatorKind.HODGES_LEHMANN,
}

ALL_KINDS = tuple(StatKind)

#: per-coordinate location shift of the contaminating mixture component
DEFAULT_SHIFT_SCALE = 5.0


@dataclass(frozen=True)
class LimitSpec:
    """Weights and mean offsets of a weighted (non-central) chi-squared limit."""

    weights: NDArray[np.float64]
    offsets: NDArray[np.float64]

    def __post_init__(self):
        w = as_vector(self.weights, "weights")
        a = as_vector(self.offsets, "offsets") if np.asarray(self.offsets).size else np.zeros_like(w)
        a = np.asarray(a, dtype=float)
        if np.any(w <= 0):
            raise ValueError("limit weights must be positive")
        if a.shape != w.shape:
            raise DimensionMismatch("weights and offsets have different lengths")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "offsets", a)

    @classmethod
    def central(cls, weights: ArrayLike) -> "LimitSpec":
        w = as_vector(weights, "weights")
        return cls(w, np.zeros_like(w))


@dataclass(frozen=True)
class VarianceConstants:
    """Scalars in front of Sigma in the four limiting covariance matrices.

    ``c1`` scales the forward-search limit; ``sigma2_sq`` through
    ``sigma4_sq`` scale the mean, coordinate-wise-median and Hodges-Lehmann
    limits.  Entries are ``math.inf`` when the defining integral diverges
    (Cauchy kernel: c1 and sigma2_sq), which forbids formula calibration of
    the corresponding statistic.
    """

    family: str
    d: int
    gamma: float
    c1: float
    sigma2_sq: float
    sigma3_sq: float
    sigma4_sq: float

    def scalar_for(self, kind: StatKind) -> float:
        return {
            StatKind.T1: self.c1,
            StatKind.T2: self.sigma2_sq,
            StatKind.T3: self.sigma3_sq,
            StatKind.T4: self.sigma4_sq,
        }[kind]


def scatter_scale_constant(family: str, d: int, gamma: float) -> float:
    """The scalar c1 = pi^{d/2} I1(d) / (d gamma Gamma(d/2)).

    This is the constant the limiting forward-search covariance formula puts
    in front of Sigma.  Returns ``math.inf`` when I1 diverges (Cauchy).
    """
    gen = generator_by_name(family)
    try:
        i1 = radial_integral(gen, d, 1)
    except DivergentIntegral:
        return math.inf
    return math.pi ** (d / 2) * i1 / (d * gamma * math.gamma(d / 2))


def variance_constants(family: str, d: int, gamma: float) -> VarianceConstants:
    gen = generator_by_name(family)
    g1_0 = marginal_density_at_zero(gen, d)
    int_g1_sq = marginal_density_sq_integral(gen, d)
    return VarianceConstants(
        family=family,
        d=d,
        gamma=gamma,
        c1=scatter_scale_constant(family, d, gamma),
        sigma2_sq=component_variance(gen, d),
        sigma3_sq=1.0 / (4.0 * g1_0**2),
        sigma4_sq=1.0 / (12.0 * int_g1_sq**2),
    )


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def statistic(
    kind: StatKind,
    data: ArrayLike,
    mu0: ArrayLike,
    config: ForwardSearchConfig | None = None,
) -> float:
    """n * squared Euclidean norm of (estimate - mu0).

    For the forward-search statistic a :class:`ForwardSearchConfig` supplies
    the scatter and retention fraction; it defaults to identity scatter with
    gamma = 1/2.
    """
    x = as_data_matrix(data)
    mu = as_vector(mu0, "mu0")
    if x.shape[1] != mu.size:
        raise DimensionMismatch("data and mu0 dimensions disagree")
    kind = StatKind(kind)
    if kind == StatKind.T1:
        if config is None:
            config = ForwardSearchConfig(mu, SpdMatrix.identity(mu.size), 0.5)
        value = est.forward_search(x, config).value
    else:
        value = est.estimate(kind.estimator, x).value
    diff = value - mu
    return float(x.shape[0] * diff @ diff)


def batch_statistics(
    data: NDArray[np.float64],
    mu0: NDArray[np.float64],
    sigma: SpdMatrix,
    gamma: float,
    kinds: Sequence[StatKind] = ALL_KINDS,
) -> dict[StatKind, NDArray[np.float64]]:
    """All requested statistics for a (reps, n, d) batch of datasets."""
    reps, n, _ = data.shape
    out: dict[StatKind, NDArray[np.float64]] = {}
    for kind in kinds:
        values = est.batch_estimates(kind.estimator, data, mu0, sigma, gamma)
        diff = values - mu0
        out[kind] = n * np.einsum("ri,ri->r", diff, diff)
    return out


# ---------------------------------------------------------------------------
# limiting laws and critical values
# ---------------------------------------------------------------------------

def limit_weights(kind: StatKind, model: EllipticalModel, gamma: float) -> LimitSpec:
    """Eigenvalue weights of the null limit of ``kind`` under ``model``.

    The weights are the eigenvalues of (scalar * Sigma) with the scalar from
    :func:`variance_constants`.  Raises :class:`InfiniteVariance` for the
    sample-mean statistic under the Cauchy kernel and
    :class:`DivergentIntegral` for the forward-search statistic there.
    """
    kind = StatKind(kind)
    consts = variance_constants(model.family, model.d, gamma)
    scalar = consts.scalar_for(kind)
    if math.isinf(scalar):
        if kind == StatKind.T2:
            raise InfiniteVariance(
                f"component variance is infinite for family {model.family!r}"
            )
        raise DivergentIntegral(
            f"limit scale constant diverges for {kind.value} under {model.family!r}"
        )
    return LimitSpec.central(scalar * model.sigma.eigenvalues)


def weighted_chisq_sample(
    spec: LimitSpec, size: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Draws of sum_i weights_i * (Z_i + offsets_i)^2."""
    z = rng.standard_normal((size, spec.weights.size)) + spec.offsets
    return (z * z) @ spec.weights


@dataclass(frozen=True)
class MonteCarloQuantile:
    """An empirical quantile and its large-sample standard error."""

    value: float
    stderr: float
    n_samples: int

    def __float__(self) -> float:  # pragma: no cover
        return self.value


def _quantile_with_se(draws: NDArray[np.float64], level: float) -> MonteCarloQuantile:
    n = draws.size
    q = float(np.quantile(draws, level))
    # density at the quantile from an order-statistic spacing of width ~ 2 sqrt(n)
    srt = np.sort(draws)
    k = int(level * (n - 1))
    h = max(1, int(math.sqrt(n)))
    lo, hi = max(0, k - h), min(n - 1, k + h)
    spacing = srt[hi] - srt[lo]
    if spacing <= 0:
        se = 0.0
    else:
        dens = (hi - lo) / (n * spacing)
        se = math.sqrt(level * (1.0 - level) / n) / dens
    return MonteCarloQuantile(q, se, n)


#: default number of weighted chi-squared draws for formula calibration
DEFAULT_MC_SAMPLES = 200_000
#: default number of null replications for empirical calibration
DEFAULT_NULL_REPS = 2_000


@dataclass(frozen=True)
class MonteCarloConfig:
    """Monte Carlo sizes used by :func:`run_test` and the campaign commands."""

    mc_samples: int = DEFAULT_MC_SAMPLES
    null_reps: int = DEFAULT_NULL_REPS


def critical_value(
    spec: LimitSpec,
    alpha: float,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> MonteCarloQuantile:
    """(1 - alpha) Monte Carlo quantile of the weighted chi-squared limit."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if mc_samples < 100:
        raise ValueError("mc_samples is too small to estimate a quantile")
    rng = stream_rng(seed, "critical-value", *map(repr, spec.weights), *map(repr, spec.offsets))
    draws = weighted_chisq_sample(spec, mc_samples, rng)
    return _quantile_with_se(draws, 1.0 - alpha)


def _simulate_null_statistics(
    family: str,
    mu0: NDArray[np.float64],
    sigma: SpdMatrix,
    n: int,
    gamma: float,
    kinds: Sequence[StatKind],
    reps: int,
    seed: int,
    purpose: str = "calibration",
) -> dict[StatKind, NDArray[np.float64]]:
    args = [
        _NullChunkArgs(family, mu0, sigma.entries, n, gamma, tuple(kinds), seed, purpose, s.start, s.stop)
        for s in replication_slices(reps)
    ]
    chunks = parallel_map(_null_chunk, args)
    return {
        kind: np.concatenate([c[kind] for c in chunks]) for kind in kinds
    }


@dataclass(frozen=True)
class _NullChunkArgs:
    family: str
    mu0: NDArray[np.float64]
    sigma_entries: NDArray[np.float64]
    n: int
    gamma: float
    kinds: tuple[StatKind, ...]
    seed: int
    purpose: str
    start: int
    stop: int


def _null_chunk(args: _NullChunkArgs) -> dict[StatKind, NDArray[np.float64]]:
    sigma = SpdMatrix(args.sigma_entries)
    model = EllipticalModel(generator_by_name(args.family), args.mu0.size, args.mu0, sigma)
    data = np.empty((args.stop - args.start, args.n, args.mu0.size))
    for i, rep in enumerate(range(args.start, args.stop)):
        rng = stream_rng(args.seed, args.purpose, args.family, rep)
        data[i] = model.sample(args.n, rng)
    return batch_statistics(data, args.mu0, sigma, args.gamma, args.kinds)


def empirical_critical_value(
    kind: StatKind,
    family: str,
    mu0: ArrayLike,
    sigma: SpdMatrix,
    n: int,
    gamma: float,
    alpha: float,
    null_reps: int = DEFAULT_NULL_REPS,
    seed: int = 0,
) -> MonteCarloQuantile:
    """(1 - alpha) quantile of the statistic under parametric null simulation."""
    mu = as_vector(mu0, "mu0")
    stats = _simulate_null_statistics(family, mu, sigma, n, gamma, (StatKind(kind),), null_reps, seed)
    return _quantile_with_se(stats[StatKind(kind)], 1.0 - alpha)


# ---------------------------------------------------------------------------
# single-test runner and report
# ---------------------------------------------------------------------------

REPORT_SCHEMA = "fstest/1"


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test run; ``decision`` is reject iff value > critical_value."""

    statistic: StatKind
    value: float
    critical_value: float
    alpha: float
    decision: str
    p_value: float | None
    mc_samples: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "statistic": self.statistic.value,
            "value": self.value,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "decision": self.decision,
            "p_value": self.p_value,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
        }


def _decide(value: float, crit: float) -> str:
    return "reject" if value > crit else "retain"


def run_test(
    kind: StatKind,
    data: ArrayLike,
    mu0: ArrayLike,
    sigma: SpdMatrix | ArrayLike | None = None,
    gamma: float = 0.5,
    alpha: float = 0.05,
    family: str = "gaussian",
    calibration: str = "empirical",
    mc: MonteCarloConfig = MonteCarloConfig(),
    seed: int = 0,
) -> TestReport:
    """Test the hypothesized location against the data.

    ``calibration="formula"`` draws the critical value from the weighted
    chi-squared limit; ``"empirical"`` simulates the null distribution of the
    statistic itself under the named family at the observed sample size.
    """
    kind = StatKind(kind)
    x = as_data_matrix(data)
    mu = as_vector(mu0, "mu0")
    if sigma is None:
        sigma = SpdMatrix.identity(mu.size)
    elif not isinstance(sigma, SpdMatrix):
        sigma = SpdMatrix(sigma)
    config = ForwardSearchConfig(mu, sigma, gamma)
    value = statistic(kind, x, mu, config)
    if calibration == "formula":
        model = EllipticalModel(generator_by_name(family), mu.size, mu, sigma)
        spec = limit_weights(kind, model, gamma)
        crit = critical_value(spec, alpha, mc.mc_samples, seed)
        used = mc.mc_samples
    elif calibration == "empirical":
        crit = empirical_critical_value(
            kind, family, mu, sigma, x.shape[0], gamma, alpha, mc.null_reps, seed
        )
        used = mc.null_reps
    else:
        raise ValueError(f"unknown calibration {calibration!r}")
    return TestReport(
        statistic=kind,
        value=value,
        critical_value=crit.value,
        alpha=alpha,
        decision=_decide(value, crit.value),
        p_value=None,
        mc_samples=used,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# power campaigns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _MixChunkArgs:
    family: str
    d: int
    n: int
    gamma: float
    beta: float
    shift_scale: float
    kinds: tuple[StatKind, ...]
    seed: int
    start: int
    stop: int


def _mixture_chunk(args: _MixChunkArgs) -> dict[StatKind, NDArray[np.float64]]:
    gen = generator_by_name(args.family)
    mu0 = np.zeros(args.d)
    sigma = SpdMatrix.identity(args.d)
    null = EllipticalModel(gen, args.d, mu0, sigma)
    shifted = EllipticalModel(gen, args.d, np.full(args.d, args.shift_scale), sigma)
    mix = MixtureModel(args.beta, null, shifted)
    data = np.empty((args.stop - args.start, args.n, args.d))
    for i, rep in enumerate(range(args.start, args.stop)):
        rng = stream_rng(args.seed, "power", args.family, repr(float(args.beta)), rep)
        data[i] = sample_mixture(mix, args.n, rng)
    return batch_statistics(data, mu0, sigma, args.gamma, args.kinds)


def power_table(
    families: Sequence[str],
    beta_grid: Sequence[float],
    *,
    kinds: Sequence[StatKind] = ALL_KINDS,
    d: int = 4,
    n: int = 100,
    reps: int = 1000,
    gamma: float = 0.5,
    alpha: float = 0.05,
    shift_scale: float = DEFAULT_SHIFT_SCALE,
    null_reps: int = DEFAULT_NULL_REPS,
    seed: int = 0,
) -> dict[str, dict[StatKind, dict[float, float]]]:
    """Rejection rates against location mixtures, empirically calibrated.

    For each family the null distribution of every statistic is simulated
    once (``null_reps`` replications) to fix critical values, then ``reps``
    mixture datasets per beta are tested.  The contaminating component is
    the family shifted by ``shift_scale`` in every coordinate.  All streams
    are derived per replication, so the result is independent of worker
    count.
    """
    kinds = tuple(StatKind(k) for k in kinds)
    mu0 = np.zeros(d)
    sigma = SpdMatrix.identity(d)
    table: dict[str, dict[StatKind, dict[float, float]]] = {}
    for family in families:
        null_stats = _simulate_null_statistics(
            family, mu0, sigma, n, gamma, kinds, null_reps, seed
        )
        crits = {k: float(np.quantile(null_stats[k], 1.0 - alpha)) for k in kinds}
        table[family] = {k: {} for k in kinds}
        for beta in beta_grid:
            args = [
                _MixChunkArgs(family, d, n, gamma, float(beta), shift_scale, kinds, seed, s.start, s.stop)
                for s in replication_slices(reps)
            ]
            chunks = parallel_map(_mixture_chunk, args)
            for k in kinds:
                stats = np.concatenate([c[k] for c in chunks])
                table[family][k][float(beta)] = float(np.mean(stats > crits[k]))
    return table


def power_curve(
    kind: StatKind,
    family: str,
    beta_grid: Sequence[float],
    *,
    d: int = 4,
    n: int = 100,
    reps: int = 1000,
    gamma: float = 0.5,
    alpha: float = 0.05,
    shift_scale: float = DEFAULT_SHIFT_SCALE,
    null_reps: int = DEFAULT_NULL_REPS,
    seed: int = 0,
) -> list[tuple[float, float]]:
    """Power along a mixture-weight grid for one statistic and family.

    Uses the same replication streams as :func:`power_table`, so a curve is
    the corresponding table row.
    """
    kind = StatKind(kind)
    table = power_table(
        [family],
        beta_grid,
        kinds=(kind,),
        d=d,
        n=n,
        reps=reps,
        gamma=gamma,
        alpha=alpha,
        shift_scale=shift_scale,
        null_reps=null_reps,
        seed=seed,
    )
    row = table[family][kind]
    return [(float(b), row[float(b)]) for b in beta_grid]


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------

def _bootstrap_statistics(
    kind: StatKind,
    data: NDArray[np.float64],
    mu0: NDArray[np.float64],
    sigma: SpdMatrix,
    gamma: float,
    j: int,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    n = data.shape[0]
    idx = rng.integers(0, n, size=(j, n))
    # chunk resamples to bound scratch memory (Hodges-Lehmann is quadratic in n)
    chunk = max(1, 2_000_000 // (n * data.shape[1]))
    out = np.empty(j)
    for start in range(0, j, chunk):
        block = data[idx[start : start + chunk]]
        stats = batch_statistics(block, mu0, sigma, gamma, (kind,))
        out[start : start + chunk] = stats[kind]
    return out


def bootstrap_p_value(
    kind: StatKind,
    data: ArrayLike,
    mu0: ArrayLike,
    sigma: SpdMatrix | ArrayLike | None = None,
    gamma: float = 0.5,
    j: int = 10_000,
    seed: int = 0,
) -> float:
    """Fraction of ``j`` with-replacement resamples whose statistic exceeds
    the observed one (strict inequality, no continuity correction)."""
    p, _, _ = bootstrap_report(kind, data, mu0, sigma, gamma=gamma, j=j, seed=seed)
    return p


def bootstrap_report(
    kind: StatKind,
    data: ArrayLike,
    mu0: ArrayLike,
    sigma: SpdMatrix | ArrayLike | None = None,
    *,
    gamma: float = 0.5,
    alpha: float = 0.05,
    j: int = 10_000,
    seed: int = 0,
) -> tuple[float, float, float]:
    """(p_value, bootstrap critical value at alpha, observed statistic)."""
    kind = StatKind(kind)
    x = as_data_matrix(data)
    mu = as_vector(mu0, "mu0")
    if sigma is None:
        sigma = SpdMatrix.identity(mu.size)
    elif not isinstance(sigma, SpdMatrix):
        sigma = SpdMatrix(sigma)
    if j < 1:
        raise ValueError("j must be positive")
    config = ForwardSearchConfig(mu, sigma, gamma)
    t0 = statistic(kind, x, mu, config)
    rng = stream_rng(seed, "bootstrap", kind.value)
    stats = _bootstrap_statistics(kind, x, mu, sigma, gamma, j, rng)
    p = float(np.mean(stats > t0))
    crit = float(np.quantile(stats, 1.0 - alpha))
    return p, crit, t0
