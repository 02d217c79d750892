"""Bivariate model families: Gaussian, mixture, noisy regression, rotation.

Every model exposes sampling, the conditional CDF of Y given X, the marginal
CDF/PDF of Y, and (where a family formula exists and is valid) a theoretical
xi.  Sampling is inverse-CDF throughout, driven by numpy's PCG64 generator on
53-bit centered uniforms, so draws are deterministic given the seed and
reproducible across platforms.

Quadrature: the rotation family with non-Gaussian components evaluates its
conditional/marginal CDFs by adaptive quadrature (absolute tolerance below
1e-9); the regression family computes its Y-marginal by fixed high-order
Gauss quadrature over the X distribution, cross-checked against adaptive
quadrature in the test suite.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri, roots_hermite, stdtr, stdtrit

from .core import PairedSample
from .errors import InvalidInputError, NumericError
from .theory import (
    XiEstimate,
    v0_rotation,
    xi_gaussian_smallrho,
    xi_regression_asymptotic,
    xi_rotation_asymptotic,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_GAUSS_NODES = 160

GAUSS_RHO_VALIDITY = 0.2       # |rho| range where the small-rho law is quoted
ROTATION_DELTA_VALIDITY = 0.1  # |delta| range where delta^2 V0 is quoted
REGRESSION_SNR_VALIDITY = 10.0  # asymptotic xi quoted when sigma^2 >= 10 var_g
NULL_SIGMA_PROXY = 1e6         # sigma at least this large is treated as the null proxy


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """53-bit centered uniforms on (0, 1); never 0 or 1, safe for inverse CDFs."""
    return (rng.integers(0, 1 << 53, size=n) + 0.5) * 2.0 ** -53


def _make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


def _phi(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * t * t) / _SQRT_2PI


# ---------------------------------------------------------------------------
# component densities (rotation family) and X distributions (regression)
# ---------------------------------------------------------------------------

class GaussianDensity:
    """Standard normal component: zero mean, unit variance."""

    name = "gaussian"

    def pdf(self, t):
        return float(_phi(t)) if np.isscalar(t) else _phi(t)

    def dpdf(self, t):
        return -t * self.pdf(t)

    def cdf(self, t):
        return ndtr(t)

    def ppf(self, u):
        return ndtri(u)


class StudentTDensity:
    """Student-t component rescaled to unit variance; requires df > 2.

    The rotation-family regularity assumptions hold for df >= 10.
    """

    def __init__(self, df: float):
        if not (df > 2.0):
            raise InvalidInputError(f"StudentTDensity requires df > 2, got {df}")
        self.df = float(df)
        self.scale = math.sqrt((self.df - 2.0) / self.df)  # V = scale * T_df
        self.name = f"student_t({df:g})"
        self._log_norm = (math.lgamma((self.df + 1.0) / 2.0)
                          - math.lgamma(self.df / 2.0)
                          - 0.5 * math.log(self.df * math.pi))

    def _std_pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(self._log_norm - 0.5 * (self.df + 1.0) * np.log1p(t * t / self.df))
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        return self._std_pdf(np.asarray(t) / self.scale) / self.scale

    def dpdf(self, t):
        z = np.asarray(t, dtype=float) / self.scale
        slope = -(self.df + 1.0) * z / (self.df + z * z)
        out = self._std_pdf(z) * slope / self.scale ** 2
        return float(out) if out.ndim == 0 else out

    def cdf(self, t):
        return stdtr(self.df, np.asarray(t, dtype=float) / self.scale)

    def ppf(self, u):
        return self.scale * stdtrit(self.df, np.asarray(u, dtype=float))


class _NormalX:
    name = "normal"

    def ppf(self, u):
        return ndtri(u)

    def pdf(self, x):
        return _phi(x)

    def nodes(self):
        z, w = roots_hermite(_GAUSS_NODES)
        return math.sqrt(2.0) * z, w / math.sqrt(math.pi)


class _UniformX:
    name = "uniform"

    def ppf(self, u):
        return np.asarray(u, dtype=float)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= 0.0) & (x <= 1.0)).astype(float)

    def nodes(self):
        z, w = np.polynomial.legendre.leggauss(_GAUSS_NODES)
        return (z + 1.0) / 2.0, w / 2.0


_X_DISTS = {"normal": _NormalX, "uniform": _UniformX}

_G_FUNCTIONS = {
    "identity": lambda x: np.asarray(x, dtype=float),
    "square": lambda x: np.square(np.asarray(x, dtype=float)),
    "sine": lambda x: np.sin(np.asarray(x, dtype=float)),
}


# ---------------------------------------------------------------------------
# model families
# ---------------------------------------------------------------------------

class BivariateModel:
    """Interface shared by all families; immutable after construction."""

    name: str = "abstract"

    @property
    def params(self) -> dict:
        raise NotImplementedError

    def sample(self, n: int, seed) -> PairedSample:
        raise NotImplementedError

    def cond_cdf(self, t: float, x: float) -> float:
        """P(Y <= t | X = x)."""
        raise NotImplementedError

    def marg_y_cdf(self, t: float) -> float:
        """P(Y <= t)."""
        raise NotImplementedError

    def marg_y_pdf(self, t: float) -> float:
        raise NotImplementedError

    def cond_cdf_many(self, t, x) -> np.ndarray:
        """Elementwise cond_cdf on broadcastable arrays (loop fallback)."""
        t_b, x_b = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        out = np.empty(t_b.shape)
        flat_t, flat_x, flat_o = t_b.ravel(), x_b.ravel(), out.ravel()
        for i in range(flat_t.size):
            flat_o[i] = self.cond_cdf(flat_t[i], flat_x[i])
        return out

    def marg_y_cdf_many(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([self.marg_y_cdf(ti) for ti in t])

    def theoretical_xi(self) -> Optional[XiEstimate]:
        """Family formula for xi(f) when one exists inside its validity range."""
        return None

    def is_effectively_null(self) -> bool:
        """True when the family parameter sits at (or proxies) independence."""
        return False


class GaussianModel(BivariateModel):
    """Standard bivariate Gaussian with correlation rho: X = Z1, Y = rho Z1 + sqrt(1-rho^2) Z2."""

    name = "gaussian"

    def __init__(self, rho: float):
        if not (abs(rho) < 1.0):
            raise InvalidInputError(f"GaussianModel requires |rho| < 1, got {rho}")
        self.rho = float(rho)
        self._s = math.sqrt(1.0 - self.rho ** 2)

    @property
    def params(self) -> dict:
        return {"rho": self.rho}

    def sample(self, n: int, seed) -> PairedSample:
        if n < 1:
            raise InvalidInputError(f"sample size must be >= 1, got {n}")
        rng = _make_rng(seed)
        z1 = ndtri(_open_uniform(rng, n))
        z2 = ndtri(_open_uniform(rng, n))
        return PairedSample(z1, self.rho * z1 + self._s * z2)

    def cond_cdf(self, t, x):
        return ndtr((np.asarray(t, float) - self.rho * np.asarray(x, float)) / self._s)

    cond_cdf_many = cond_cdf

    def marg_y_cdf(self, t):
        return ndtr(np.asarray(t, dtype=float))

    marg_y_cdf_many = marg_y_cdf

    def marg_y_pdf(self, t):
        return _phi(t)

    def theoretical_xi(self):
        if abs(self.rho) <= GAUSS_RHO_VALIDITY:
            return xi_gaussian_smallrho(self.rho)
        return None

    def is_effectively_null(self) -> bool:
        return self.rho == 0.0


class MixtureModel(BivariateModel):
    """(1-r) * independent product + r * dependent component.

    Default instantiation: standard normal marginals with the dependent
    component a bivariate Gaussian of correlation rho0, whose marginals match
    the product marginals by construction; xi(f_r) = r^2 xi(g) holds exactly.
    """

    name = "mixture"

    def __init__(self, r: float, rho0: float = 0.8):
        if not (0.0 <= r <= 1.0):
            raise InvalidInputError(f"MixtureModel requires r in [0, 1], got {r}")
        if not (abs(rho0) < 1.0):
            raise InvalidInputError(f"MixtureModel requires |rho0| < 1, got {rho0}")
        self.r = float(r)
        self.rho0 = float(rho0)
        self._s0 = math.sqrt(1.0 - self.rho0 ** 2)

    @property
    def params(self) -> dict:
        return {"r": self.r, "rho0": self.rho0}

    def dependent_component(self) -> GaussianModel:
        """The dependent component g as a model (used to measure xi(g))."""
        return GaussianModel(self.rho0)

    def sample(self, n: int, seed) -> PairedSample:
        if n < 1:
            raise InvalidInputError(f"sample size must be >= 1, got {n}")
        rng = _make_rng(seed)
        pick = _open_uniform(rng, n) < self.r
        z1 = ndtri(_open_uniform(rng, n))
        z2 = ndtri(_open_uniform(rng, n))
        y = np.where(pick, self.rho0 * z1 + self._s0 * z2, z2)
        return PairedSample(z1, y)

    def cond_cdf(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        dep = ndtr((t - self.rho0 * x) / self._s0)
        return (1.0 - self.r) * ndtr(t) + self.r * dep

    cond_cdf_many = cond_cdf

    def marg_y_cdf(self, t):
        return ndtr(np.asarray(t, dtype=float))

    marg_y_cdf_many = marg_y_cdf

    def marg_y_pdf(self, t):
        return _phi(t)

    def is_effectively_null(self) -> bool:
        return self.r == 0.0


class RegressionModel(BivariateModel):
    """Noisy nonparametric regression Y = g(X) + sigma * Z, Z ~ N(0,1) independent of X."""

    name = "regression"

    def __init__(self, g: str = "identity", sigma: float = 1.0, x_dist: str = "normal"):
        if g not in _G_FUNCTIONS:
            raise InvalidInputError(f"unknown g {g!r}; choices: {sorted(_G_FUNCTIONS)}")
        if x_dist not in _X_DISTS:
            raise InvalidInputError(f"unknown x_dist {x_dist!r}; choices: {sorted(_X_DISTS)}")
        if not (sigma > 0.0):
            raise InvalidInputError(f"sigma must be positive, got {sigma}")
        self.g_name = g
        self.g = _G_FUNCTIONS[g]
        self.sigma = float(sigma)
        self.x_dist = _X_DISTS[x_dist]()
        self._nodes, self._weights = self.x_dist.nodes()
        self._g_nodes = self.g(self._nodes)

    @property
    def params(self) -> dict:
        return {"g": self.g_name, "sigma": self.sigma, "x_dist": self.x_dist.name}

    def var_g(self) -> float:
        """Var(g(X)) under the X distribution, by quadrature."""
        mean = float(self._weights @ self._g_nodes)
        return float(self._weights @ (self._g_nodes - mean) ** 2)

    def sample(self, n: int, seed) -> PairedSample:
        if n < 1:
            raise InvalidInputError(f"sample size must be >= 1, got {n}")
        rng = _make_rng(seed)
        x = self.x_dist.ppf(_open_uniform(rng, n))
        z = ndtri(_open_uniform(rng, n))
        return PairedSample(x, self.g(x) + self.sigma * z)

    def cond_cdf(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return ndtr((t - self.g(x)) / self.sigma)

    cond_cdf_many = cond_cdf

    def marg_y_cdf(self, t):
        out = self.marg_y_cdf_many(np.atleast_1d(t))
        return float(out[0]) if np.isscalar(t) else out.reshape(np.shape(t))

    def marg_y_cdf_many(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1, 1)
        vals = ndtr((flat - self._g_nodes[None, :]) / self.sigma) @ self._weights
        return vals.reshape(t.shape)

    def marg_y_pdf(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1, 1)
        vals = (_phi((flat - self._g_nodes[None, :]) / self.sigma) / self.sigma) @ self._weights
        out = vals.reshape(t.shape)
        return float(out) if out.ndim == 0 else out

    def theoretical_xi(self):
        vg = self.var_g()
        if self.sigma ** 2 >= REGRESSION_SNR_VALIDITY * vg and vg > 0.0:
            return xi_regression_asymptotic(self.sigma, vg)
        if vg == 0.0:
            return xi_regression_asymptotic(self.sigma, 0.0)
        return None

    def is_effectively_null(self) -> bool:
        # sigma = inf is proxied by sigma >= 1e6 (documented caveat)
        return self.sigma >= NULL_SIGMA_PROXY or self.var_g() == 0.0


class RotationModel(BivariateModel):
    """Rotation/Konijn pair: X = U + Delta V, Y = Delta U + V with independent
    zero-mean unit-variance components U ~ f1, V ~ f2 (default standard normal)."""

    name = "rotation"

    def __init__(self, delta: float, f1=None, f2=None):
        if not (abs(delta) < 1.0):
            raise InvalidInputError(f"RotationModel requires |delta| < 1, got {delta}")
        self.delta = float(delta)
        self.f1 = f1 if f1 is not None else GaussianDensity()
        self.f2 = f2 if f2 is not None else GaussianDensity()
        self._gaussian = (isinstance(self.f1, GaussianDensity)
                          and isinstance(self.f2, GaussianDensity))
        d2 = self.delta ** 2
        self._var = 1.0 + d2                      # Var X = Var Y
        self._beta = 2.0 * self.delta / self._var  # E[Y|X=x] slope, Gaussian case
        self._cond_sd = (1.0 - d2) / math.sqrt(self._var)
        self._v0: Optional[float] = None

    @property
    def params(self) -> dict:
        return {"delta": self.delta, "f1": self.f1.name, "f2": self.f2.name}

    def sample(self, n: int, seed) -> PairedSample:
        if n < 1:
            raise InvalidInputError(f"sample size must be >= 1, got {n}")
        rng = _make_rng(seed)
        u = self.f1.ppf(_open_uniform(rng, n))
        v = self.f2.ppf(_open_uniform(rng, n))
        return PairedSample(u + self.delta * v, self.delta * u + v)

    def _joint_density(self, x: float, y: float) -> float:
        one_minus = 1.0 - self.delta ** 2
        u = (x - self.delta * y) / one_minus
        v = (y - self.delta * x) / one_minus
        return self.f1.pdf(u) * self.f2.pdf(v) / one_minus

    def cond_cdf(self, t, x):
        if self._gaussian:
            t = np.asarray(t, dtype=float)
            x = np.asarray(x, dtype=float)
            return ndtr((t - self._beta * x) / self._cond_sd)
        t = float(t)
        x = float(x)
        num, num_err = integrate.quad(lambda y: self._joint_density(x, y),
                                      -np.inf, t, epsabs=1e-13, limit=300)
        den, den_err = integrate.quad(lambda y: self._joint_density(x, y),
                                      -np.inf, np.inf, epsabs=1e-13, limit=300)
        if den <= 1e-300:
            raise NumericError(f"rotation cond_cdf: vanishing X density at x={x:g}")
        # quad's reported error is conservative; gate only on clear failures
        if num_err + den_err > 1e-7 * max(den, 1e-12):
            raise NumericError(
                f"rotation cond_cdf quadrature too inaccurate at (t={t:g}, x={x:g})"
            )
        return min(max(num / den, 0.0), 1.0)

    def cond_cdf_many(self, t, x):
        if self._gaussian:
            return self.cond_cdf(t, x)
        return super().cond_cdf_many(t, x)

    def marg_y_cdf(self, t):
        if self._gaussian:
            return ndtr(np.asarray(t, dtype=float) / math.sqrt(self._var))
        t = float(t)
        val, err = integrate.quad(
            lambda u: self.f1.pdf(u) * float(self.f2.cdf(t - self.delta * u)),
            -np.inf, np.inf, epsabs=1e-12, limit=300)
        if err > 1e-7:
            raise NumericError(f"rotation marg_y_cdf quadrature too inaccurate at t={t:g}")
        return min(max(val, 0.0), 1.0)

    def marg_y_cdf_many(self, t):
        if self._gaussian:
            return self.marg_y_cdf(t)
        return super().marg_y_cdf_many(t)

    def marg_y_pdf(self, t):
        if self._gaussian:
            sd = math.sqrt(self._var)
            return _phi(np.asarray(t, dtype=float) / sd) / sd
        t = float(t)
        val, err = integrate.quad(
            lambda u: self.f1.pdf(u) * self.f2.pdf(t - self.delta * u),
            -np.inf, np.inf, epsabs=1e-12, limit=300)
        if err > 1e-7:
            raise NumericError(f"rotation marg_y_pdf quadrature too inaccurate at t={t:g}")
        return val

    def v0(self) -> float:
        """Curvature constant V0 for this component pair (cached)."""
        if self._v0 is None:
            self._v0 = v0_rotation(self.f1, self.f2)
        return self._v0

    def theoretical_xi(self):
        if abs(self.delta) <= ROTATION_DELTA_VALIDITY:
            return xi_rotation_asymptotic(self.delta, self.v0())
        return None

    def is_effectively_null(self) -> bool:
        return self.delta == 0.0


def make_model(family: str, params: dict) -> BivariateModel:
    """Build a model from the JSON model spec {"family": ..., "params": {...}}."""
    params = dict(params)
    try:
        if family == "gaussian":
            return GaussianModel(rho=params.pop("rho"))
        if family == "mixture":
            return MixtureModel(r=params.pop("r"), rho0=params.pop("rho0", 0.8))
        if family == "regression":
            return RegressionModel(g=params.pop("g", "identity"),
                                   sigma=params.pop("sigma"),
                                   x_dist=params.pop("x_dist", "normal"))
        if family == "rotation":
            components = params.pop("components", "gaussian")
            delta = params.pop("delta")
            if components == "gaussian":
                f1 = f2 = GaussianDensity()
            elif components == "student_t":
                df = params.pop("df", 12.0)
                f1 = StudentTDensity(df)
                f2 = StudentTDensity(df)
            else:
                raise InvalidInputError(f"unknown rotation components {components!r}")
            return RotationModel(delta, f1=f1, f2=f2)
    except KeyError as exc:
        raise InvalidInputError(f"model family {family!r} missing parameter {exc}") from exc
    raise InvalidInputError(f"unknown model family {family!r}")
