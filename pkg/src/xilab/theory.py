"""Population dependence functional, model-family closed forms, and power theory.

The Monte Carlo estimator of the population functional

    xi(f) = 6 * integral E[ P(Y <= t | X) - P(Y <= t) ]^2 f_Y(t) dt

works against any model object exposing ``sample(n, seed)``,
``cond_cdf_many(t, x)`` (elementwise, broadcastable) and
``marg_y_cdf_many(t)``; see xilab.models.  Asymptotic formulas carry explicit
validity notes instead of clamping.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .diagnostics import normal_cdf, normal_quantile
from .errors import InvalidInputError, NumericError

SQRT3_OVER_PI = math.sqrt(3.0) / math.pi
_MC_CHUNK_ROWS = 128


class XiMethod(enum.Enum):
    MONTE_CARLO = "monte_carlo"
    CLOSED_FORM = "closed_form"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class XiEstimate:
    """A value of the dependence functional with its provenance.

    Monte Carlo and closed-form values live in [0, 1] (Monte Carlo up to
    3 standard errors of noise above 1); asymptotic values may leave the
    valid range for large parameters and say so in ``note``.
    """

    value: float
    std_error: float
    method: XiMethod
    note: str = ""

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidInputError("XiEstimate.value must be finite")
        if self.std_error < 0.0:
            raise InvalidInputError("XiEstimate.std_error must be >= 0")
        if self.method is XiMethod.CLOSED_FORM and not (0.0 <= self.value <= 1.0):
            raise InvalidInputError(f"closed-form xi outside [0, 1]: {self.value}")
        if self.method is XiMethod.MONTE_CARLO:
            if self.value < -1e-12 or self.value > 1.0 + 3.0 * self.std_error + 1e-12:
                raise InvalidInputError(
                    f"Monte Carlo xi {self.value} outside [0, 1 + 3 SE]"
                )


@dataclass(frozen=True)
class RateParams:
    """Smoothness/moment exponents: gamma > 1, theta > 1, 0 < eta <= 1."""

    gamma: float
    theta: float
    eta: float

    def __post_init__(self):
        if not (self.gamma > 1.0):
            raise InvalidInputError(f"gamma must exceed 1, got {self.gamma}")
        if not (self.theta > 1.0):
            raise InvalidInputError(f"theta must exceed 1, got {self.theta}")
        if not (0.0 < self.eta <= 1.0):
            raise InvalidInputError(f"eta must lie in (0, 1], got {self.eta}")


class DetectionRegime(enum.Enum):
    NULL = "null"            # power -> alpha
    CRITICAL = "critical"    # power -> limit in (alpha, 1)
    CONSISTENT = "consistent"  # power -> 1


def _jackknife_se_mean(values: np.ndarray) -> float:
    """Delete-one jackknife standard error of the sample mean."""
    m = values.size
    if m < 2:
        return float("nan")
    loo = (values.sum() - values) / (m - 1)
    return math.sqrt((m - 1) / m * float(np.sum((loo - loo.mean()) ** 2)))


def xi_population_mc(model, m_outer: int = 2000, m_inner: int = 500,
                     seed: int | np.random.SeedSequence = 0) -> XiEstimate:
    """Monte Carlo estimate of xi(f) for a bivariate model.

    Draws m_outer points t from the Y marginal (sampling the model and
    discarding x), then for each t averages
    (cond_cdf(t, X_j) - marg_y_cdf(t))^2 over m_inner fresh X draws, and
    multiplies by 6.  The standard error is the jackknife over outer draws.
    """
    if m_outer < 100 or m_inner < 100:
        raise InvalidInputError("xi_population_mc requires m_outer, m_inner >= 100")
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    t_seed, x_seed = ss.spawn(2)
    ts = model.sample(m_outer, t_seed).y
    marg = np.asarray(model.marg_y_cdf_many(ts), dtype=float)

    n_chunks = (m_outer + _MC_CHUNK_ROWS - 1) // _MC_CHUNK_ROWS
    chunk_seeds = x_seed.spawn(n_chunks)
    per_t = np.empty(m_outer)
    for c in range(n_chunks):
        i0 = c * _MC_CHUNK_ROWS
        i1 = min(i0 + _MC_CHUNK_ROWS, m_outer)
        rows = i1 - i0
        xs = model.sample(rows * m_inner, chunk_seeds[c]).x.reshape(rows, m_inner)
        diff = np.asarray(model.cond_cdf_many(ts[i0:i1, None], xs), dtype=float)
        diff -= marg[i0:i1, None]
        per_t[i0:i1] = np.mean(diff * diff, axis=1)
    value = 6.0 * float(per_t.mean())
    se = 6.0 * _jackknife_se_mean(per_t)
    return XiEstimate(value, se, XiMethod.MONTE_CARLO)


def xi_gaussian_smallrho(rho: float) -> XiEstimate:
    """Small-correlation law xi = rho^2 * sqrt(3)/pi for the bivariate Gaussian."""
    if not (abs(rho) < 1.0):
        raise InvalidInputError(f"|rho| must be < 1, got {rho}")
    note = "small-rho asymptotic; quoted accuracy only for |rho| <= 0.2"
    return XiEstimate(rho * rho * SQRT3_OVER_PI, 0.0, XiMethod.ASYMPTOTIC, note)


def xi_mixture_exact(r: float, xi_g: float) -> XiEstimate:
    """Exact mixture identity xi(f_r) = r^2 * xi(g) under matching marginals."""
    if not (0.0 <= r <= 1.0):
        raise InvalidInputError(f"mixing probability r must lie in [0, 1], got {r}")
    if not (0.0 <= xi_g <= 1.0):
        raise InvalidInputError(f"xi_g must lie in [0, 1], got {xi_g}")
    return XiEstimate(r * r * xi_g, 0.0, XiMethod.CLOSED_FORM)


def xi_regression_asymptotic(sigma: float, var_g: float) -> XiEstimate:
    """Large-noise law xi = (sqrt(3)/pi) * Var(g(X)) / sigma^2 for Y = g(X) + sigma*Z."""
    if not (sigma > 0.0):
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    if var_g < 0.0:
        raise InvalidInputError(f"var_g must be >= 0, got {var_g}")
    note = "large-sigma asymptotic; quoted accuracy only for sigma^2 >> var_g"
    return XiEstimate(SQRT3_OVER_PI * var_g / (sigma * sigma), 0.0, XiMethod.ASYMPTOTIC, note)


def xi_rotation_asymptotic(delta: float, v0: float) -> XiEstimate:
    """Small-rotation law xi = delta^2 * V0."""
    if not (abs(delta) < 1.0):
        raise InvalidInputError(f"|delta| must be < 1, got {delta}")
    if not (v0 > 0.0):
        raise InvalidInputError(f"v0 must be positive, got {v0}")
    note = "small-delta asymptotic; quoted accuracy only for |delta| <= 0.1"
    return XiEstimate(delta * delta * v0, 0.0, XiMethod.ASYMPTOTIC, note)


def _quad(fn, name: str, epsabs: float = 1e-12):
    res = integrate.quad(fn, -np.inf, np.inf, epsabs=epsabs, limit=300, full_output=1)
    if len(res) >= 4:
        raise NumericError(f"quadrature of {name} failed: {res[3]}")
    value, abserr = res[0], res[1]
    if abserr > 1e-7 * max(1.0, abs(value)):
        raise NumericError(f"quadrature of {name} too inaccurate: abserr={abserr:g}")
    return value


def v0_rotation(f1, f2) -> float:
    """Curvature constant of the rotation family,

        V0 = 6 * ( E[f2(V)^2] + I(f1) * E[J(V)^2] - 2 * E[J(V) f2(V)] ),

    with J(t) the partial first moment of f2 and I(f1) the Fisher information
    of the first component.  ``f1`` and ``f2`` expose scalar ``pdf`` and
    ``dpdf`` (density derivative) callables.  All expectations are adaptive
    quadratures to absolute tolerance below 1e-9.
    """

    def fisher_integrand(u):
        p = f1.pdf(u)
        if p < 1e-300:
            return 0.0
        d = f1.dpdf(u)
        return d * d / p

    def partial_first_moment(t):
        # J(t) = int_{-inf}^t y f2(y) dy; integrate the shorter tail
        if t <= 0.0:
            res = integrate.quad(lambda y: y * f2.pdf(y), -np.inf, t,
                                 epsabs=1e-13, limit=300)
            return res[0]
        res = integrate.quad(lambda y: y * f2.pdf(y), t, np.inf,
                             epsabs=1e-13, limit=300)
        return -res[0]

    e_f2_sq = _quad(lambda v: f2.pdf(v) ** 3, "E[f2(V)^2]")
    fisher = _quad(fisher_integrand, "I(f1)")
    e_j_sq = _quad(lambda v: partial_first_moment(v) ** 2 * f2.pdf(v), "E[J(V)^2]")
    cross = _quad(lambda v: partial_first_moment(v) * f2.pdf(v) ** 2, "E[J(V) f2(V)]")
    return 6.0 * (e_f2_sq + fisher * e_j_sq - 2.0 * cross)


def asymptotic_power(n: int, xi_value: float, alpha: float) -> float:
    """Asymptotic power 1 - Phi(z_alpha - sqrt(n) * xi / sqrt(2/5))."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if xi_value < 0.0:
        raise InvalidInputError(f"xi_value must be >= 0, got {xi_value}")
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    z_alpha = normal_quantile(1.0 - alpha)
    drift = math.sqrt(n) * xi_value / math.sqrt(0.4)
    return float(normal_cdf(drift - z_alpha))


def _local_power(drift: float, alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    z_alpha = normal_quantile(1.0 - alpha)
    return float(normal_cdf(drift - z_alpha))


def local_power_mixture(c0: float, xi_g: float, alpha: float) -> float:
    """Limit power on the n^{-1/4} mixture boundary: 1 - Phi(z_a - c0^2 xi_g / sqrt(2/5))."""
    if c0 < 0.0:
        raise InvalidInputError(f"c0 must be >= 0, got {c0}")
    if not (0.0 <= xi_g <= 1.0):
        raise InvalidInputError(f"xi_g must lie in [0, 1], got {xi_g}")
    return _local_power(c0 * c0 * xi_g / math.sqrt(0.4), alpha)


def local_power_regression(c0: float, var_g: float, alpha: float) -> float:
    """Limit power on the sigma_n = c0^{-1} n^{1/4} regression boundary."""
    if c0 < 0.0:
        raise InvalidInputError(f"c0 must be >= 0, got {c0}")
    if var_g < 0.0:
        raise InvalidInputError(f"var_g must be >= 0, got {var_g}")
    return _local_power(c0 * c0 * SQRT3_OVER_PI * var_g / math.sqrt(0.4), alpha)


def local_power_rotation(c0: float, v0: float, alpha: float) -> float:
    """Limit power on the Delta_n = c0 n^{-1/4} rotation boundary."""
    if c0 < 0.0:
        raise InvalidInputError(f"c0 must be >= 0, got {c0}")
    if v0 < 0.0:
        raise InvalidInputError(f"v0 must be >= 0, got {v0}")
    return _local_power(c0 * c0 * v0 / math.sqrt(0.4), alpha)


def detection_regime(scaled_limit: float) -> DetectionRegime:
    """Classify lim sqrt(n) xi(f^(n)): 0 -> NULL, finite positive -> CRITICAL, inf -> CONSISTENT."""
    if math.isnan(scaled_limit) or scaled_limit < 0.0:
        raise InvalidInputError(f"scaled limit must lie in [0, +inf], got {scaled_limit}")
    if scaled_limit == 0.0:
        return DetectionRegime.NULL
    if math.isinf(scaled_limit):
        return DetectionRegime.CONSISTENT
    return DetectionRegime.CRITICAL


def bn_rate(n: int, params: RateParams) -> float:
    """Remainder rate b_n = n^{-g/(g+1)} log(n)^2 + (log(n)^2/n)^min(g(t-1)/(t(g+1)), e*g/(g+1))."""
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n}")
    g, t, e = params.gamma, params.theta, params.eta
    log_sq = math.log(n) ** 2
    exponent = min(g * (t - 1.0) / (t * (g + 1.0)), e * g / (g + 1.0))
    return n ** (-g / (g + 1.0)) * log_sq + (log_sq / n) ** exponent


def rate_condition_holds(params: RateParams) -> bool:
    """The exponent condition min((theta-1)/theta, eta) > (gamma+1)/(2 gamma)."""
    g, t, e = params.gamma, params.theta, params.eta
    return min((t - 1.0) / t, e) > (g + 1.0) / (2.0 * g)
