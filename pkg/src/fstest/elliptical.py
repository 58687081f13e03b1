"""Elliptical location-scatter families: densities, samplers, scores, integrals.

A family is described by a radial kernel g so that the density in dimension d
is ``k(d) |Sigma|^{-1/2} g((y-mu)' Sigma^{-1} (y-mu))`` with

    k(d) = Gamma(d/2) * pi^{-d/2} / I0(d),
    I_p(d) = integral_0^inf x^{d/2 - 1 + p} g(x) dx   (p = 0, 1).

Three kernels ship:

* ``gaussian``  g(x) = exp(-x/2)
* ``cauchy``    g(x) = (1 + x)^{-(d+1)/2}   (multivariate t with 1 df)
* ``light100``  g(x) = exp(-x**100), an extremely light-tailed kernel

The Cauchy kernel has a divergent first radial moment integral, which callers
must treat explicitly (:class:`DivergentIntegral`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, special

from .linalg import DimensionMismatch, SpdMatrix, as_vector, mahalanobis_sq_many

__all__ = [
    "DivergentIntegral",
    "DensityGenerator",
    "GAUSSIAN",
    "CAUCHY",
    "LIGHT100",
    "FAMILY_TAGS",
    "generator_by_name",
    "radial_integral",
    "normalizing_constant",
    "EllipticalModel",
    "standard_model",
    "MixtureModel",
    "sample_mixture",
    "marginal_density",
    "marginal_density_at_zero",
    "marginal_density_sq_integral",
    "radial_cdf",
    "radial_quantile",
    "truncated_radial_mean",
    "component_variance",
]


class DivergentIntegral(ArithmeticError):
    """A requested radial integral does not converge."""


_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-11, limit=200)


def _quad(fn, a, b, **kw):
    opts = {**_QUAD_OPTS, **kw}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(fn, a, b, **opts)
    return value


class DensityGenerator:
    """Radial kernel of an elliptical family.

    Subclasses implement the kernel, its log-derivative, the radial sampler,
    and closed forms where they exist.  ``d`` is passed explicitly because
    the Cauchy kernel depends on the dimension.
    """

    tag: str = ""

    def g(self, x: ArrayLike, d: int) -> NDArray[np.float64]:
        return np.exp(self.log_g(x, d))

    def log_g(self, x: ArrayLike, d: int) -> NDArray[np.float64]:
        raise NotImplementedError

    def dlog_g(self, x: ArrayLike, d: int) -> NDArray[np.float64]:
        """g'(x)/g(x)."""
        raise NotImplementedError

    def radial_integral_closed(self, d: int, power: int) -> float | None:
        """Closed form of I_power(d) when one exists, else None."""
        return None

    def radial_tail_exponent(self, d: int, power: int) -> float:
        """Exponent e with integrand ~ x^e as x -> inf; -inf for exponential decay."""
        return -math.inf

    def sample_radius_sq(self, d: int, size: int, rng: np.random.Generator) -> NDArray[np.float64]:
        raise NotImplementedError

    def sample_standard(self, d: int, size: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """Draws from the standard member (mu = 0, Sigma = I)."""
        r_sq = self.sample_radius_sq(d, size, rng)
        z = rng.standard_normal((size, d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        u = z / norms
        return np.sqrt(r_sq)[:, None] * u

    def g1_zero_closed(self, d: int) -> float | None:
        """Closed form of the standardized marginal density at zero, if known."""
        return None

    def int_g1_sq_closed(self, d: int) -> float | None:
        """Closed form of the integral of the squared standardized marginal."""
        return None

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityGenerator({self.tag})"


class _Gaussian(DensityGenerator):
    tag = "gaussian"

    def log_g(self, x, d):
        return -0.5 * np.asarray(x, dtype=float)

    def dlog_g(self, x, d):
        return np.full_like(np.asarray(x, dtype=float), -0.5)

    def radial_integral_closed(self, d, power):
        return 2.0 ** (d / 2 + power) * math.gamma(d / 2 + power)

    def sample_radius_sq(self, d, size, rng):
        return rng.chisquare(d, size=size)

    def sample_standard(self, d, size, rng):
        return rng.standard_normal((size, d))

    def g1_zero_closed(self, d):
        return 1.0 / math.sqrt(2.0 * math.pi)

    def int_g1_sq_closed(self, d):
        return 1.0 / (2.0 * math.sqrt(math.pi))


class _Cauchy(DensityGenerator):
    tag = "cauchy"

    def log_g(self, x, d):
        return -0.5 * (d + 1) * np.log1p(np.asarray(x, dtype=float))

    def dlog_g(self, x, d):
        return -0.5 * (d + 1) / (1.0 + np.asarray(x, dtype=float))

    def radial_integral_closed(self, d, power):
        if power >= 0.5:
            raise DivergentIntegral(
                f"cauchy radial integral of power {power} diverges (tail ~ x^{power - 1.5})"
            )
        return math.exp(special.betaln(d / 2, 0.5 - power))

    def radial_tail_exponent(self, d, power):
        return power - 1.5

    def sample_radius_sq(self, d, size, rng):
        return rng.chisquare(d, size=size) / rng.chisquare(1, size=size)

    def sample_standard(self, d, size, rng):
        z = rng.standard_normal((size, d))
        w = rng.chisquare(1, size=size)
        return z / np.sqrt(w)[:, None]

    def g1_zero_closed(self, d):
        # every marginal of the multivariate t with 1 df is standard Cauchy
        return 1.0 / math.pi

    def int_g1_sq_closed(self, d):
        return 1.0 / (2.0 * math.pi)


class _Light100(DensityGenerator):
    """Kernel exp(-x**100): nearly uniform on the unit ball, vanishing beyond."""

    tag = "light100"
    _EXPONENT = 100

    def log_g(self, x, d):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return -np.power(x, self._EXPONENT)

    def dlog_g(self, x, d):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return -self._EXPONENT * np.power(x, self._EXPONENT - 1)

    def radial_integral_closed(self, d, power):
        p = self._EXPONENT
        return math.gamma((d / 2 + power) / p) / p

    def sample_radius_sq(self, d, size, rng):
        t = rng.gamma(d / (2 * self._EXPONENT), size=size)
        return np.power(t, 1.0 / self._EXPONENT)


GAUSSIAN = _Gaussian()
CAUCHY = _Cauchy()
LIGHT100 = _Light100()

_GENERATORS = {g.tag: g for g in (GAUSSIAN, CAUCHY, LIGHT100)}
FAMILY_TAGS = tuple(_GENERATORS)


def generator_by_name(name: str) -> DensityGenerator:
    try:
        return _GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; expected one of {FAMILY_TAGS}") from None


def radial_integral(
    generator: DensityGenerator, d: int, power: int, method: str = "auto"
) -> float:
    """I_power(d) = integral of x^{d/2-1+power} g(x) over (0, inf).

    ``method="auto"`` prefers the closed form; ``"quadrature"`` forces the
    numeric path (used for cross-checks).  Raises :class:`DivergentIntegral`
    when the integral does not converge.
    """
    if d < 1:
        raise ValueError("d must be a positive integer")
    if power not in (0, 1):
        raise ValueError("power must be 0 or 1")
    if generator.radial_tail_exponent(d, power) >= -1.0:
        raise DivergentIntegral(
            f"{generator.tag} radial integral of power {power} diverges in dimension {d}"
        )
    if method == "auto":
        closed = generator.radial_integral_closed(d, power)
        if closed is not None:
            return closed
        method = "quadrature"
    if method == "closed":
        closed = generator.radial_integral_closed(d, power)
        if closed is None:
            raise ValueError(f"no closed form for {generator.tag}, d={d}, power={power}")
        return closed
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    expo = d / 2 - 1 + power
    if generator.tag == "cauchy":
        # substitute u = (1+x)^{-1/2}; the integrand becomes a smooth Beta form
        def integrand(u):
            x = 1.0 / (u * u) - 1.0
            return 2.0 * (1.0 - u * u) ** (d / 2 - 1) * x**power

        return _quad(integrand, 0.0, 1.0)
    if generator.tag == "light100":
        # support is effectively [0, ~1.1]; give the boundary layer as a hint
        def integrand(x):
            return x**expo * math.exp(-(x**100))

        return _quad(integrand, 0.0, 1.2, points=[0.9, 1.0, 1.05])

    def integrand(x):
        return x**expo * float(generator.g(x, d))

    return _quad(integrand, 0.0, np.inf)


def normalizing_constant(generator: DensityGenerator, d: int) -> float:
    """k(d) = Gamma(d/2) pi^{-d/2} / I0(d)."""
    return math.exp(log_normalizing_constant(generator, d))


@lru_cache(maxsize=None)
def _log_norm_const(tag: str, d: int) -> float:
    gen = generator_by_name(tag)
    i0 = radial_integral(gen, d, 0)
    return math.lgamma(d / 2) - (d / 2) * math.log(math.pi) - math.log(i0)


def log_normalizing_constant(generator: DensityGenerator, d: int) -> float:
    return _log_norm_const(generator.tag, d)


class EllipticalModel:
    """A generator plus location vector and SPD scatter matrix."""

    def __init__(
        self,
        generator: DensityGenerator,
        d: int | None = None,
        mu: ArrayLike | None = None,
        sigma: SpdMatrix | ArrayLike | None = None,
    ):
        if d is None:
            if mu is None:
                raise ValueError("either d or mu must be given")
            d = len(np.asarray(mu))
        self.generator = generator
        self.d = int(d)
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        self.mu = np.zeros(self.d) if mu is None else as_vector(mu, "mu")
        if self.mu.size != self.d:
            raise DimensionMismatch("mu length disagrees with d")
        if sigma is None:
            sigma = SpdMatrix.identity(self.d)
        elif not isinstance(sigma, SpdMatrix):
            sigma = SpdMatrix(sigma)
        if sigma.d != self.d:
            raise DimensionMismatch("sigma dimension disagrees with d")
        self.sigma = sigma
        self.log_k = log_normalizing_constant(generator, self.d)

    @property
    def family(self) -> str:
        return self.generator.tag

    def with_location(self, mu: ArrayLike) -> "EllipticalModel":
        return EllipticalModel(self.generator, self.d, mu, self.sigma)

    def mahalanobis_sq(self, y: ArrayLike) -> NDArray[np.float64]:
        return mahalanobis_sq_many(y, self.mu, self.sigma)

    def log_density(self, y: ArrayLike) -> NDArray[np.float64] | float:
        """Log density at one point (d,) or at each row of an (n, d) array."""
        y = np.asarray(y, dtype=float)
        squeeze = y.ndim == 1
        x = self.mahalanobis_sq(y)
        out = self.log_k - 0.5 * self.sigma.log_det + self.generator.log_g(x, self.d)
        return float(out) if squeeze else out

    def density(self, y: ArrayLike) -> NDArray[np.float64] | float:
        return np.exp(self.log_density(y))

    def location_score(self, y: ArrayLike) -> NDArray[np.float64]:
        """Gradient of log density with respect to the location, at ``y``.

        Equals ``-2 (g'(x)/g(x)) Sigma^{-1} (y - mu)`` with x the squared
        distance of y from mu.
        """
        y = np.asarray(y, dtype=float)
        x = self.mahalanobis_sq(y)
        diff = y - self.mu
        if not self.sigma.is_identity:
            diff = diff @ self.sigma.inverse
        coef = -2.0 * self.generator.dlog_g(x, self.d)
        return np.asarray(coef)[..., None] * diff

    def sample(self, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """n i.i.d. draws, shape (n, d)."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        z = self.generator.sample_standard(self.d, n, rng)
        if not self.sigma.is_identity:
            z = z @ self.sigma.cholesky_factor.T
        return z + self.mu

    def __repr__(self) -> str:  # pragma: no cover
        return f"EllipticalModel({self.family}, d={self.d})"


def standard_model(family: str | DensityGenerator, d: int) -> EllipticalModel:
    gen = family if isinstance(family, DensityGenerator) else generator_by_name(family)
    return EllipticalModel(gen, d)


@dataclass(frozen=True)
class MixtureModel:
    """(1 - beta) * null + beta * shifted, identical generator and scatter."""

    beta: float
    null_component: EllipticalModel
    shifted_component: EllipticalModel

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        f, g = self.null_component, self.shifted_component
        if f.family != g.family or f.d != g.d:
            raise ValueError("mixture components must share the family and dimension")
        if not np.allclose(f.sigma.entries, g.sigma.entries, rtol=1e-12, atol=0):
            raise ValueError("mixture components must share the scatter matrix")


def sample_mixture(mixture: MixtureModel, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """n draws, each independently from the shifted component with prob beta."""
    take_shifted = rng.random(n) < mixture.beta
    k = int(take_shifted.sum())
    out = np.empty((n, mixture.null_component.d))
    if k:
        out[take_shifted] = mixture.shifted_component.sample(k, rng)
    if n - k:
        out[~take_shifted] = mixture.null_component.sample(n - k, rng)
    return out


# ---------------------------------------------------------------------------
# marginal quantities of the standard member
# ---------------------------------------------------------------------------

def marginal_density(generator: DensityGenerator, d: int, t: float) -> float:
    """Density of the first coordinate of the standard member, at t.

    Computed by reducing the (d-1)-dimensional integral over the remaining
    coordinates to one radial integral in s = |rest|^2:

        f1(t) = k(d) * pi^{(d-1)/2} / Gamma((d-1)/2)
                * integral_0^inf s^{(d-1)/2 - 1} g(t^2 + s) ds
    """
    k = normalizing_constant(generator, d)
    if d == 1:
        return k * float(generator.g(t * t, d))
    expo = (d - 1) / 2 - 1
    tsq = t * t
    if generator.tag == "light100":
        # integrand dies once t^2 + s exceeds ~1.1
        upper = max(1.2 - tsq, 0.0) + 0.05
        if upper <= 1e-12:
            return 0.0

        def integrand(s):
            return s**expo * math.exp(-((tsq + s) ** 100)) if s > 0 else 0.0

        hint = max(1.0 - tsq, 1e-6)
        inner = _quad(integrand, 0.0, upper, points=[min(hint, upper)])
    else:

        def integrand(s):
            return s**expo * float(generator.g(tsq + s, d))

        inner = _quad(integrand, 0.0, np.inf)
    front = k * math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2)
    return front * inner


@lru_cache(maxsize=None)
def _g1_zero(tag: str, d: int) -> float:
    gen = generator_by_name(tag)
    closed = gen.g1_zero_closed(d)
    if closed is not None:
        return closed
    return marginal_density(gen, d, 0.0)


def marginal_density_at_zero(
    generator: DensityGenerator, d: int, method: str = "auto"
) -> float:
    """g1(0): the standardized marginal density at the origin."""
    if method == "quadrature":
        return marginal_density(generator, d, 0.0)
    return _g1_zero(generator.tag, d)


@lru_cache(maxsize=None)
def _int_g1_sq(tag: str, d: int, forced_quadrature: bool) -> float:
    gen = generator_by_name(tag)
    if not forced_quadrature:
        closed = gen.int_g1_sq_closed(d)
        if closed is not None:
            return closed
    if tag == "light100":
        upper = 1.3
    else:
        upper = np.inf
    value = _quad(
        lambda t: marginal_density(gen, d, t) ** 2, 0.0, upper, epsabs=1e-12, epsrel=1e-10
    )
    return 2.0 * value  # marginal is symmetric


def marginal_density_sq_integral(
    generator: DensityGenerator, d: int, method: str = "auto"
) -> float:
    """Integral of the squared standardized marginal density."""
    return _int_g1_sq(generator.tag, d, method == "quadrature")


# ---------------------------------------------------------------------------
# the squared-radius distribution x = |Y|^2 of the standard member
# ---------------------------------------------------------------------------

def radial_cdf(generator: DensityGenerator, d: int, x: float) -> float:
    """P(squared radius <= x) for the standard member."""
    if x <= 0:
        return 0.0
    tag = generator.tag
    if tag == "gaussian":
        return float(special.gammainc(d / 2, x / 2))
    if tag == "cauchy":
        return float(special.betainc(d / 2, 0.5, x / (1.0 + x)))
    if tag == "light100":
        return float(special.gammainc(d / 200, x**100))
    i0 = radial_integral(generator, d, 0)
    return _quad(lambda s: s ** (d / 2 - 1) * float(generator.g(s, d)), 0.0, x) / i0


def radial_quantile(generator: DensityGenerator, d: int, p: float) -> float:
    """Quantile of the squared radius; p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    tag = generator.tag
    if tag == "gaussian":
        return 2.0 * float(special.gammaincinv(d / 2, p))
    if tag == "cauchy":
        b = float(special.betaincinv(d / 2, 0.5, p))
        return b / (1.0 - b)
    if tag == "light100":
        return float(special.gammaincinv(d / 200, p)) ** (1.0 / 100.0)
    from scipy.optimize import brentq

    hi = 1.0
    while radial_cdf(generator, d, hi) < p:
        hi *= 2.0
        if hi > 1e12:  # pragma: no cover
            raise ArithmeticError("radial quantile bracket failed")
    return float(brentq(lambda x: radial_cdf(generator, d, x) - p, 0.0, hi, xtol=1e-12))


def truncated_radial_mean(generator: DensityGenerator, d: int, gamma: float) -> float:
    """E[x 1{x <= q_gamma}] for the squared radius x, by quadrature.

    With gamma = 1 this is the full mean I1/I0 (divergent for the Cauchy
    kernel, raising :class:`DivergentIntegral`).
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    i0 = radial_integral(generator, d, 0)
    if gamma == 1.0:
        return radial_integral(generator, d, 1) / i0
    q = radial_quantile(generator, d, gamma)

    def integrand(x):
        return x ** (d / 2) * float(generator.g(x, d))

    return _quad(integrand, 0.0, q) / i0


def component_variance(generator: DensityGenerator, d: int) -> float:
    """Variance of one coordinate of the standard member: I1 / (d * I0).

    Returns +inf for kernels whose first radial moment diverges.
    """
    try:
        i1 = radial_integral(generator, d, 1)
    except DivergentIntegral:
        return math.inf
    return i1 / (d * radial_integral(generator, d, 0))
