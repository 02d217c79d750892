"""Chatterjee's rank correlation xi_n, its min-rank variant, and the asymptotic test.

Conventions
-----------
* Ranks are max-ranks under ties: r_i = #{j : y_j <= y_i}.
* Ties in x are rejected by default; a RandomBreak policy resolves them by a
  seeded uniform perturbation of the sort order among tied values.
* Rank sums are accumulated in exact integer arithmetic; the final statistic
  is a single correctly-rounded division, so small-sample values are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import normal_cdf, normal_quantile
from .errors import InvalidInputError, TieError

NULL_VARIANCE = 2.0 / 5.0  # asymptotic variance of sqrt(n) * xi_n under independence


@dataclass(frozen=True)
class TiePolicy:
    """How to handle ties among the x values.

    ``reject`` (default) raises TieError; ``random`` breaks ties by a uniform
    shuffle of the sort order among tied values, deterministic given ``seed``.
    """

    mode: str = "reject"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("reject", "random"):
            raise InvalidInputError(f"unknown tie policy mode {self.mode!r}")
        if self.mode == "random" and self.seed is None:
            raise InvalidInputError("RandomBreak tie policy requires a seed")

    @classmethod
    def reject(cls) -> "TiePolicy":
        return cls("reject")

    @classmethod
    def random_break(cls, seed: int) -> "TiePolicy":
        return cls("random", int(seed))


REJECT = TiePolicy.reject()


@dataclass(frozen=True)
class PairedSample:
    """n paired real observations (x_i, y_i); the input to all statistics."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1:
            raise InvalidInputError("x and y must be 1-D vectors")
        if x.size != y.size:
            raise InvalidInputError(f"length mismatch: len(x)={x.size}, len(y)={y.size}")
        if x.size == 0:
            raise InvalidInputError("sample must be nonempty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInputError("sample entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class NeighborMap:
    """x-sorted traversal: sigma orders indices by increasing x; successor[i]
    is the index immediately to the right of i in that order (-1 for the
    x-maximum, which has no genuine right neighbor)."""

    sigma: np.ndarray
    successor: np.ndarray


@dataclass(frozen=True)
class TestResult:
    """Outcome of the asymptotic level-alpha independence test."""

    xi: float
    z: float
    p_value: float
    alpha: float
    reject: bool


def compute_ranks(values) -> np.ndarray:
    """Max-ranks r_i = #{j : values_j <= values_i}, computed in O(n log n)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("rank input must be a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("rank input must be finite")
    sorted_v = np.sort(v, kind="stable")
    return np.searchsorted(sorted_v, v, side="right").astype(np.int64)


def _sort_order(x: np.ndarray, policy: TiePolicy) -> np.ndarray:
    """Indices ordering x increasingly, applying the tie policy."""
    if policy.mode == "reject":
        xs = np.sort(x, kind="stable")
        dup = xs[1:][xs[1:] == xs[:-1]]
        if dup.size:
            vals = ", ".join(repr(float(v)) for v in np.unique(dup)[:5])
            raise TieError(f"ties among x values ({vals}) under the Reject policy")
        return np.argsort(x, kind="stable")
    rng = np.random.default_rng(policy.seed)
    jitter = rng.random(x.size)
    return np.lexsort((jitter, x))


def neighbor_map(x, policy: TiePolicy = REJECT) -> NeighborMap:
    """Nearest-right-neighbor map over the x values."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError("neighbor_map requires a 1-D vector of length >= 2")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x values must be finite")
    sigma = _sort_order(x, policy)
    successor = np.full(x.size, -1, dtype=np.int64)
    successor[sigma[:-1]] = sigma[1:]
    return NeighborMap(sigma=sigma, successor=successor)


def _concomitant_ranks(sample: PairedSample, policy: TiePolicy) -> np.ndarray:
    sigma = neighbor_map(sample.x, policy).sigma
    return compute_ranks(sample.y)[sigma]


def xi_n(sample: PairedSample, policy: TiePolicy = REJECT) -> float:
    """Chatterjee's correlation 1 - 3/(n^2-1) * sum |R_(i+1) - R_(i)|.

    R_(i) is the y-rank of the observation with i-th smallest x.  The value
    lies in [1 - 3(n-1)/(n+1), (n-2)/(n+1)] for tie-free samples.
    """
    n = sample.n
    if n < 2:
        raise InvalidInputError(f"xi_n requires n >= 2, got n={n}")
    r = _concomitant_ranks(sample, policy)
    gap_sum = int(np.abs(np.diff(r)).sum())
    denom = n * n - 1
    return (denom - 3 * gap_sum) / denom


def xi_prime(sample: PairedSample, policy: TiePolicy = REJECT) -> float:
    """Min-rank variant 6/(n^2-1) * sum over adjacent x-pairs of min{R_i, R_N(i)}.

    The sum runs over the n-1 genuine adjacent pairs, so the exact identity
    xi_n = xi_prime - (2n+1)/(n-1) + 3(R_(1)+R_(n))/(n^2-1) holds for every
    tie-free sample.
    """
    n = sample.n
    if n < 2:
        raise InvalidInputError(f"xi_prime requires n >= 2, got n={n}")
    r = _concomitant_ranks(sample, policy)
    min_sum = int(np.minimum(r[:-1], r[1:]).sum())
    return 6 * min_sum / (n * n - 1)


def null_test(sample: PairedSample, alpha: float, policy: TiePolicy = REJECT) -> TestResult:
    """Level-alpha one-sided test of independence based on the null CLT.

    z = sqrt(n) * xi_n / sqrt(2/5); rejects iff z >= z_alpha (boundary
    inclusive); p-value is 1 - Phi(z).
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    xi = xi_n(sample, policy)
    z = math.sqrt(sample.n) * xi / math.sqrt(NULL_VARIANCE)
    z_alpha = normal_quantile(1.0 - alpha)
    return TestResult(
        xi=xi,
        z=z,
        p_value=float(normal_cdf(-z)),
        alpha=alpha,
        reject=bool(z >= z_alpha),
    )


def xi_values_from_arrays(x, y, policy: TiePolicy = REJECT) -> float:
    """Convenience wrapper: xi_n on raw arrays."""
    return xi_n(PairedSample(x, y), policy)
