"""Tests for the oracle statistics xi_star / xi_star_prime."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from xilab.core import PairedSample, xi_n
from xilab.errors import InvalidCdfError
from xilab.models import GaussianModel
from xilab.oracle import (
    CdfFn,
    empirical_cdf,
    pairwise_abs_sum,
    pairwise_min_sum,
    xi_star,
    xi_star_prime,
)

UNIFORM01 = CdfFn(lambda t: np.clip(np.asarray(t, dtype=float), 0.0, 1.0), name="uniform01")
STD_NORMAL = CdfFn(lambda t: ndtr(np.asarray(t, dtype=float)), name="std_normal")


def naive_abs_sum(a):
    return sum(abs(ai - aj) for ai in a for aj in a)


def naive_min_sum(a):
    return sum(min(ai, aj) for i, ai in enumerate(a) for j, aj in enumerate(a) if i != j)


class TestSortedSumIdentities:
    def test_abs_identity_random_instances(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            n = int(rng.integers(2, 101))
            a = rng.random(n)
            assert abs(pairwise_abs_sum(a) - naive_abs_sum(a)) <= 1e-12 * n * n

    def test_min_identity_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            n = int(rng.integers(2, 101))
            a = rng.random(n)
            assert abs(pairwise_min_sum(a) - naive_min_sum(a)) <= 1e-12 * n * n

    def test_with_duplicates(self):
        a = np.array([0.25, 0.5, 0.5, 0.5, 0.9])
        assert pairwise_abs_sum(a) == naive_abs_sum(a)
        assert pairwise_min_sum(a) == naive_min_sum(a)


def naive_xi_star(sample, f):
    a = np.asarray(f(sample.y), dtype=float)
    n = sample.n
    order = np.argsort(sample.x)
    conc = a[order]
    adjacent = sum(abs(conc[i + 1] - conc[i]) for i in range(n - 1))
    return 3.0 * n / (n * n - 1.0) * (naive_abs_sum(a) / n - adjacent)


def naive_xi_star_prime(sample, f):
    a = np.asarray(f(sample.y), dtype=float)
    n = sample.n
    order = np.argsort(sample.x)
    conc = a[order]
    adjacent = sum(min(conc[i], conc[i + 1]) for i in range(n - 1))
    return 6.0 * n / (n * n - 1.0) * (adjacent - naive_min_sum(a) / n)


class TestXiStar:
    def test_hand_example(self):
        s = PairedSample([1, 2, 3], [0.2, 0.6, 0.4])
        assert abs(xi_star(s, UNIFORM01) - (-0.075)) <= 1e-12

    def test_hand_example_n2(self):
        s = PairedSample([4.0, 9.0], [0.3, 0.7])
        assert abs(xi_star(s, UNIFORM01)) <= 1e-15

    def test_matches_naive_double_loop(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            s = PairedSample(rng.normal(size=n), rng.random(n))
            assert abs(xi_star(s, UNIFORM01) - naive_xi_star(s, UNIFORM01)) <= 1e-11

    def test_empirical_cdf_reproduces_xi_n(self):
        # substituting the empirical CDF collapses the oracle to xi_n itself
        rng = np.random.default_rng(4)
        for n in (5, 23, 117):
            s = PairedSample(rng.normal(size=n), rng.normal(size=n))
            f_hat = empirical_cdf(s.y)
            diff = xi_star(s, f_hat, allow_empirical=True) - xi_n(s)
            assert abs(diff) <= 10.0 / n

    def test_refuses_empirical_cdf_without_flag(self):
        s = PairedSample([1.0, 2.0, 3.0], [0.1, 0.9, 0.5])
        with pytest.raises(InvalidCdfError, match="empirical"):
            xi_star(s, empirical_cdf(s.y))

    def test_rejects_cdf_values_outside_unit_interval(self):
        # passes the coarse construction grid but misbehaves on the data
        def fn(t):
            t = np.asarray(t, dtype=float)
            return np.where(t == 0.5, 1.2, np.clip(t, 0.0, 1.0))

        bad = CdfFn(fn, name="bad")
        s = PairedSample([1.0, 2.0], [0.5, 0.8])
        with pytest.raises(InvalidCdfError, match="outside"):
            xi_star(s, bad)

    def test_construction_rejects_decreasing_cdf(self):
        with pytest.raises(InvalidCdfError):
            CdfFn(lambda t: 1.0 - np.clip(np.asarray(t, float), 0.0, 1.0), name="dec")

    def test_construction_rejects_wrong_limits(self):
        with pytest.raises(InvalidCdfError):
            CdfFn(lambda t: np.full(np.shape(t), 0.5), name="const")


class TestXiStarPrime:
    def test_degenerate_equal_values(self):
        s = PairedSample([1.0, 2.0, 3.0, 4.0], [0.4, 0.4, 0.4, 0.4])
        assert abs(xi_star_prime(s, UNIFORM01)) <= 1e-14

    def test_hand_example(self):
        s = PairedSample([1, 2, 3], [0.2, 0.6, 0.4])
        assert abs(xi_star_prime(s, UNIFORM01) - 0.15) <= 1e-12

    def test_matches_naive_double_loop(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            s = PairedSample(rng.normal(size=n), rng.random(n))
            got = xi_star_prime(s, UNIFORM01)
            assert abs(got - naive_xi_star_prime(s, UNIFORM01)) <= 1e-11

    def test_variance_of_difference_shrinks(self):
        # n E(xi_star - xi_star_prime)^2 stays O(1/n) after centering
        model = GaussianModel(0.0)
        n, reps = 400, 300
        diffs = np.empty(reps)
        for j in range(reps):
            s = model.sample(n, np.random.SeedSequence((81, j)))
            diffs[j] = xi_star(s, STD_NORMAL) - xi_star_prime(s, STD_NORMAL)
        assert n * diffs.var(ddof=1) <= 0.5


class TestOracleNullVariance:
    def test_scaled_variances_near_two_fifths(self):
        model = GaussianModel(0.0)
        n, reps = 500, 1000
        xis = np.empty(reps)
        stars = np.empty(reps)
        for j in range(reps):
            s = model.sample(n, np.random.SeedSequence((82, j)))
            xis[j] = xi_n(s)
            stars[j] = xi_star(s, STD_NORMAL)
        assert 0.33 <= n * xis.var(ddof=1) <= 0.47
        assert 0.33 <= n * stars.var(ddof=1) <= 0.47

    def test_large_n_fast_path_stability(self):
        # compensated sums keep the sorted-sum path consistent with itself
        rng = np.random.default_rng(6)
        n = 100_000
        s = PairedSample(rng.normal(size=n), rng.normal(size=n))
        v = xi_star(s, STD_NORMAL)
        assert math.isfinite(v)
        assert abs(v - xi_n(s)) <= 0.05  # oracle and empirical CDFs agree loosely
