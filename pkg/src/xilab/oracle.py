"""Oracle variants of xi_n that use the true marginal CDF of Y.

xi_star replaces the empirical CDF in xi_n's pairwise representation by a
supplied population CDF; xi_star_prime is the matching min-form.  Both
compute their O(n^2) double sums in O(n log n) through sorted-sum identities:

    sum_{i != j} |a_i - a_j|   = 2 * sum_k (2k - n - 1) * a_(k)
    sum_{i != j} min{a_i, a_j} = 2 * sum_k (n - k)      * a_(k)

with a_(1) <= ... <= a_(n).  Accumulation uses compensated (fsum) summation
so the fast path stays bit-stable against the naive loops for large n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import PairedSample, REJECT, TiePolicy, neighbor_map
from .errors import InvalidCdfError, InvalidInputError

_CHECK_GRID = np.array([-1e6, -10.0, -1.0, 0.0, 1.0, 10.0, 1e6])


@dataclass(frozen=True)
class CdfFn:
    """An evaluable monotone map t -> F(t) in [0, 1].

    ``fn`` must accept numpy arrays.  Construction spot-checks monotonicity
    and the +-infinity limits on a coarse grid.  ``empirical`` marks CDFs
    estimated from data; the oracle statistics refuse those unless the caller
    explicitly opts in (feeding xi_star the empirical CDF just reproduces
    xi_n and has no oracle interpretation).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "cdf"
    empirical: bool = False

    def __post_init__(self):
        vals = np.asarray(self.fn(_CHECK_GRID), dtype=float)
        if vals.shape != _CHECK_GRID.shape:
            raise InvalidCdfError(f"{self.name}: CDF must evaluate elementwise on arrays")
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise InvalidCdfError(f"{self.name}: CDF values leave [0, 1] on the check grid")
        if np.any(np.diff(vals) < -1e-12):
            raise InvalidCdfError(f"{self.name}: CDF is decreasing on the check grid")
        if vals[0] > 0.01 or vals[-1] < 0.99:
            raise InvalidCdfError(f"{self.name}: CDF limits at -+infinity look wrong")

    def __call__(self, t):
        return self.fn(t)


def pairwise_abs_sum(a: np.ndarray) -> float:
    """sum_{i != j} |a_i - a_j| via the sorted-sum identity."""
    s = np.sort(np.asarray(a, dtype=float), kind="stable")
    n = s.size
    k = np.arange(1, n + 1, dtype=float)
    return 2.0 * math.fsum(((2.0 * k - n - 1.0) * s).tolist())


def pairwise_min_sum(a: np.ndarray) -> float:
    """sum_{i != j} min{a_i, a_j} via the sorted-sum identity."""
    s = np.sort(np.asarray(a, dtype=float), kind="stable")
    n = s.size
    k = np.arange(1, n + 1, dtype=float)
    return 2.0 * math.fsum(((n - k) * s).tolist())


def _oracle_values(sample: PairedSample, f_y: CdfFn, policy: TiePolicy,
                   allow_empirical: bool) -> tuple[np.ndarray, np.ndarray]:
    if f_y.empirical and not allow_empirical:
        raise InvalidCdfError(
            f"{f_y.name}: refusing an empirical CDF as oracle; "
            "pass allow_empirical=True to override"
        )
    if sample.n < 2:
        raise InvalidInputError(f"oracle statistics require n >= 2, got n={sample.n}")
    a = np.asarray(f_y(sample.y), dtype=float)
    if a.shape != sample.y.shape or not np.all(np.isfinite(a)):
        raise InvalidCdfError(f"{f_y.name}: CDF returned a malformed value vector")
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise InvalidCdfError(f"{f_y.name}: CDF values outside [0, 1] on the data")
    sigma = neighbor_map(sample.x, policy).sigma
    return a, a[sigma]


def xi_star(sample: PairedSample, f_y: CdfFn, policy: TiePolicy = REJECT,
            allow_empirical: bool = False) -> float:
    """Oracle statistic 3n/(n^2-1) * [ (1/n) sum_{i!=j} |F(Y_i)-F(Y_j)|
    - sum over adjacent x-pairs of |F(Y_(i+1)) - F(Y_(i))| ]."""
    a, conc = _oracle_values(sample, f_y, policy, allow_empirical)
    n = sample.n
    adjacent = math.fsum(np.abs(np.diff(conc)).tolist())
    return 3.0 * n / (n * n - 1.0) * (pairwise_abs_sum(a) / n - adjacent)


def xi_star_prime(sample: PairedSample, f_y: CdfFn, policy: TiePolicy = REJECT,
                  allow_empirical: bool = False) -> float:
    """Min-form oracle statistic 6n/(n^2-1) * [ sum over adjacent x-pairs of
    min{F(Y_i), F(Y_N(i))} - (1/n) sum_{i!=j} min{F(Y_i), F(Y_j)} ]."""
    a, conc = _oracle_values(sample, f_y, policy, allow_empirical)
    n = sample.n
    adjacent = math.fsum(np.minimum(conc[:-1], conc[1:]).tolist())
    return 6.0 * n / (n * n - 1.0) * (adjacent - pairwise_min_sum(a) / n)


def empirical_cdf(values) -> CdfFn:
    """Empirical CDF of a data vector, flagged so the oracle statistics refuse it."""
    v = np.sort(np.asarray(values, dtype=float), kind="stable")
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise InvalidInputError("empirical_cdf requires a nonempty finite vector")

    def fn(t):
        return np.searchsorted(v, np.asarray(t, dtype=float), side="right") / v.size

    return CdfFn(fn, name="empirical", empirical=True)
