"""Tests for ranks, the neighbor map, xi_n, xi_prime, and the null test."""

import itertools
import math

import numpy as np
import pytest

from xilab.core import (
    PairedSample,
    REJECT,
    TiePolicy,
    compute_ranks,
    neighbor_map,
    null_test,
    xi_n,
    xi_prime,
)
from xilab.errors import InvalidInputError, TieError


def naive_xi(x, y):
    """O(n^2) oracle: counting ranks by double loop, same exact final division."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    ranks = [sum(1 for yj in y if yj <= yi) for yi in y]
    order = sorted(range(n), key=lambda i: x[i])
    conc = [ranks[i] for i in order]
    gap_sum = sum(abs(conc[i + 1] - conc[i]) for i in range(n - 1))
    return ((n * n - 1) - 3 * gap_sum) / (n * n - 1)


class TestComputeRanks:
    def test_distinct_values(self):
        assert compute_ranks([1.2, 3.4, 0.5]).tolist() == [2, 3, 1]

    def test_max_rank_under_ties(self):
        assert compute_ranks([1, 1, 2]).tolist() == [2, 2, 3]

    def test_single_element(self):
        assert compute_ranks([5]).tolist() == [1]

    def test_permutation_without_ties(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=50)
        r = compute_ranks(v)
        assert sorted(r.tolist()) == list(range(1, 51))

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            compute_ranks([1.0, np.nan])
        with pytest.raises(InvalidInputError):
            compute_ranks([np.inf, 0.0])


class TestNeighborMap:
    def test_three_points(self):
        nm = neighbor_map([3.0, 1.0, 2.0])
        assert nm.sigma.tolist() == [1, 2, 0]
        assert nm.successor[1] == 2 and nm.successor[2] == 0
        assert nm.successor[0] == -1  # x-maximum has no right neighbor

    def test_two_points(self):
        nm = neighbor_map([1.0, 2.0])
        assert nm.successor.tolist() == [1, -1]

    def test_traversal_visits_all_indices(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=40)
        nm = neighbor_map(x)
        idx = nm.sigma[0]
        seen = [idx]
        while nm.successor[idx] != -1:
            idx = nm.successor[idx]
            seen.append(idx)
        assert sorted(seen) == list(range(40))
        assert np.all(np.diff(x[np.array(seen)]) > 0)

    def test_tie_rejected_with_value(self):
        with pytest.raises(TieError, match="1.0"):
            neighbor_map([1.0, 1.0, 2.0])

    def test_random_break_is_seed_deterministic(self):
        x = np.array([1.0, 1.0, 1.0, 2.0])
        p = TiePolicy.random_break(7)
        first = neighbor_map(x, p).sigma
        again = neighbor_map(x, p).sigma
        assert first.tolist() == again.tolist()
        other = neighbor_map(x, TiePolicy.random_break(8)).sigma
        # a different seed is allowed to produce a different tie order
        assert sorted(other.tolist()) == [0, 1, 2, 3]

    def test_random_break_requires_seed(self):
        with pytest.raises(InvalidInputError):
            TiePolicy("random")


class TestXiN:
    def test_monotone_data(self):
        x = np.arange(10, dtype=float)
        assert xi_n(PairedSample(x, 2 * x + 1)) == (10 - 2) / (10 + 1)

    def test_n_two_is_zero(self):
        assert xi_n(PairedSample([0.3, 1.8], [5.0, -2.0])) == 0.0

    def test_hand_example(self):
        assert xi_n(PairedSample([1, 2, 3], [3, 1, 2])) == -1.0 / 8.0

    def test_requires_n_at_least_two(self):
        with pytest.raises(InvalidInputError):
            xi_n(PairedSample([1.0], [2.0]))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            assert xi_n(PairedSample(x, y)) == naive_xi(x, y)

    def test_all_permutations_up_to_n7(self):
        # brute-force equivalence over every concomitant arrangement
        for n in range(2, 8):
            x = np.arange(n, dtype=float)
            for perm in itertools.permutations(range(1, n + 1)):
                y = np.array(perm, dtype=float)
                assert xi_n(PairedSample(x, y)) == naive_xi(x, y)

    def test_bounds_and_upper_attainment(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            n = int(rng.integers(2, 60))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            v = xi_n(PairedSample(x, y))
            assert 1 - 3 * (n - 1) / (n + 1) - 1e-15 <= v <= (n - 2) / (n + 1) + 1e-15
        # upper bound attained iff y strictly increasing in x
        x = np.sort(rng.normal(size=25))
        assert xi_n(PairedSample(x, np.exp(x))) == (25 - 2) / (25 + 1)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=60)
        y = rng.normal(size=60)
        base = xi_n(PairedSample(x, y))
        for _ in range(10):
            perm = rng.permutation(60)
            assert xi_n(PairedSample(x[perm], y[perm])) == base

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(19)
        x = rng.normal(size=80)
        y = rng.normal(size=80)
        base = xi_n(PairedSample(x, y))
        assert xi_n(PairedSample(np.exp(x), y)) == base
        assert xi_n(PairedSample(x, y ** 3)) == base
        assert xi_n(PairedSample(2 * x + 5, np.arctan(y))) == base

    def test_asymmetric_in_general(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=50)
        y = x ** 2 + 0.2 * rng.normal(size=50)
        assert xi_n(PairedSample(x, y)) != xi_n(PairedSample(y, x))

    def test_tie_error_propagates(self):
        with pytest.raises(TieError):
            xi_n(PairedSample([1.0, 1.0, 2.0], [1.0, 2.0, 3.0]))

    def test_random_break_handles_ties(self):
        s = PairedSample([1.0, 1.0, 2.0, 2.0], [4.0, 3.0, 2.0, 1.0])
        v = xi_n(s, TiePolicy.random_break(3))
        assert math.isfinite(v)


class TestXiPrime:
    def test_hand_example(self):
        s = PairedSample([1, 2, 3], [3, 1, 2])
        assert xi_prime(s) == 1.5

    def test_monotone_n3(self):
        s = PairedSample([1.0, 2.0, 3.0], [10.0, 20.0, 30.0])
        assert xi_prime(s) == 6 * (1 + 2) / 8

    def test_exact_identity_with_xi_n(self):
        rng = np.random.default_rng(29)
        for _ in range(300):
            n = int(rng.integers(2, 50))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            s = PairedSample(x, y)
            order = np.argsort(x)
            ranks = np.argsort(np.argsort(y)) + 1
            r_first = ranks[order[0]]
            r_last = ranks[order[-1]]
            lhs = xi_n(s)
            rhs = xi_prime(s) - (2 * n + 1) / (n - 1) + 3 * (r_first + r_last) / (n * n - 1)
            assert abs(lhs - rhs) <= 1e-12


class TestNullTest:
    def test_arithmetic_example(self):
        # n=100, xi=0.1: z = 1/sqrt(0.4); engineered y so that xi_n comes out near 0.1
        z = math.sqrt(100) * 0.1 / math.sqrt(0.4)
        assert abs(z - 1.5811) < 1e-4

    def test_monotone_sample_rejects(self):
        x = np.arange(10, dtype=float)
        res = null_test(PairedSample(x, x), 0.05)
        assert res.xi == 8 / 11
        assert abs(res.z - 3.6364) < 1e-3
        assert res.reject

    def test_zero_xi_gives_half_p(self):
        # any sample with xi exactly 0: n=2
        res = null_test(PairedSample([0.0, 1.0], [1.0, 0.0]), 0.2)
        assert res.xi == 0.0 and res.z == 0.0
        assert res.p_value == 0.5
        assert not res.reject

    def test_boundary_inclusive(self):
        # this permutation gives z = 0.60606..., and alpha below makes
        # normal_quantile(1 - alpha) bit-identical to z: the boundary case
        from xilab.diagnostics import normal_quantile
        y = np.array([5, 7, 3, 4, 9, 8, 10, 1, 2, 6], dtype=float)
        alpha = 0.2722372544815055
        res = null_test(PairedSample(np.arange(10.0), y), alpha)
        assert res.z == normal_quantile(1.0 - alpha)
        assert res.reject

    def test_p_value_and_threshold_consistency(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            s = PairedSample(rng.normal(size=40), rng.normal(size=40))
            res = null_test(s, 0.1)
            assert res.reject == (res.p_value <= 0.1 + 1e-12)

    def test_alpha_validation(self):
        s = PairedSample([1.0, 2.0], [1.0, 2.0])
        for bad in (0.0, 1.0, -0.3, 1.7):
            with pytest.raises(InvalidInputError):
                null_test(s, bad)


class TestPairedSample:
    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            PairedSample([1.0, 2.0], [1.0])

    def test_nonfinite(self):
        with pytest.raises(InvalidInputError):
            PairedSample([1.0, np.nan], [1.0, 2.0])

    def test_n_property(self):
        assert PairedSample([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]).n == 3
