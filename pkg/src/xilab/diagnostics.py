"""Standard-normal utilities and Wasserstein-1 distance to the standard normal.

The W1 distance of an empirical sample to N(0, 1) is computed by exact
piecewise integration of |F_hat - Phi| between order statistics, using the
closed-form antiderivative Psi(t) = t*Phi(t) + phi(t).  A grid-quadrature
version exists only in the test suite as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import InvalidInputError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(t):
    """Standard normal CDF Phi.  Accepts scalars or arrays."""
    out = ndtr(t)
    return float(out) if np.isscalar(t) else out


def normal_pdf(t):
    """Standard normal density phi.  Accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    out = np.exp(-0.5 * t * t) / _SQRT_2PI
    return float(out) if out.ndim == 0 else out


def normal_quantile(p):
    """Inverse of the standard normal CDF; requires p strictly inside (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise InvalidInputError(f"normal_quantile requires p in (0, 1), got {p!r}")
    out = ndtri(p_arr)
    return float(out) if p_arr.ndim == 0 else out


@dataclass(frozen=True)
class StatSample:
    """Replicated values of a statistic, each computed from n_underlying observations."""

    values: np.ndarray
    n_underlying: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise InvalidInputError("StatSample.values must be a nonempty 1-D vector")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("StatSample.values must be finite")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


def _psi(t: np.ndarray) -> np.ndarray:
    # antiderivative of Phi with Psi(-inf) = 0
    return t * ndtr(t) + normal_pdf(t)


def wasserstein1_to_std_normal(sample: StatSample) -> float:
    """Exact W1 distance between the empirical law of ``sample`` and N(0, 1).

    Integrates |F_hat(t) - Phi(t)| in closed form: between consecutive order
    statistics F_hat is the constant k/m, Phi crosses that level at
    ndtri(k/m), and each piece reduces to evaluations of Psi.  The tails
    contribute Psi(x_(1)) below and phi(x_(m)) - x_(m)*(1 - Phi(x_(m))) above.
    """
    xs = np.sort(sample.values, kind="stable")
    m = xs.size
    lower_tail = float(_psi(xs[:1])[0])
    upper_tail = float(normal_pdf(xs[-1]) - xs[-1] * ndtr(-xs[-1]))
    if m == 1:
        return lower_tail + upper_tail

    a = xs[:-1]
    b = xs[1:]
    c = np.arange(1, m, dtype=float) / m
    q = ndtri(c)
    psi_a = _psi(a)
    psi_b = _psi(b)
    above = (psi_b - psi_a) - c * (b - a)          # Phi >= c on the whole piece
    below = c * (b - a) - (psi_b - psi_a)          # Phi <= c on the whole piece
    psi_q = _psi(q)
    split = (c * (q - a) - (psi_q - psi_a)) + ((psi_b - psi_q) - c * (b - q))
    pieces = np.where(q <= a, above, np.where(q >= b, below, split))
    return lower_tail + upper_tail + math.fsum(pieces.tolist())


def clt_diagnostic(raw_stats: StatSample, center: float, scale: float) -> StatSample:
    """Standardize replicated statistic values elementwise: (v - center) / scale."""
    if not (scale > 0.0) or not math.isfinite(scale):
        raise InvalidInputError(f"scale must be a finite positive real, got {scale!r}")
    if not math.isfinite(center):
        raise InvalidInputError(f"center must be finite, got {center!r}")
    return StatSample((raw_stats.values - center) / scale, raw_stats.n_underlying)
