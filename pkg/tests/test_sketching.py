import math

import numpy as np
import pytest

from rtucker.bounds import amm_bound_nearly_optimal
from rtucker.sketching import (
    ProbabilityDistribution,
    RngStream,
    basic_matrix_multiplication,
    gaussian_matrix,
    make_probabilities,
    randsample,
)


class TestGaussian:
    def test_deterministic(self):
        a = gaussian_matrix(5, 4, RngStream(7, 2))
        b = gaussian_matrix(5, 4, RngStream(7, 2))
        np.testing.assert_array_equal(a, b)

    def test_moments(self):
        g = gaussian_matrix(2000, 2000, RngStream(1, 0))
        assert abs(g.mean()) <= 0.002
        assert 0.99 <= g.var() <= 1.01

    def test_streams_uncorrelated(self):
        a = gaussian_matrix(300, 300, RngStream(5, 0)).ravel()
        b = gaussian_matrix(300, 300, RngStream(5, 1)).ravel()
        assert abs(np.corrcoef(a, b)[0, 1]) <= 0.01
        assert not np.array_equal(a, b)

    def test_accepts_generator(self):
        g = gaussian_matrix(2, 2, np.random.default_rng(0))
        assert g.shape == (2, 2)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            gaussian_matrix(0, 3, RngStream(0))


class TestProbabilities:
    def test_uniform(self):
        p = make_probabilities(np.ones((2, 4)), np.ones((4, 3)), "uniform")
        np.testing.assert_array_equal(p.weights, [0.25] * 4)

    def test_single_support(self, rng):
        a = np.zeros((3, 5))
        a[:, 2] = rng.standard_normal(3)
        p = make_probabilities(a, rng.standard_normal((5, 2)), "optimal")
        np.testing.assert_array_equal(p.weights, [0, 0, 1, 0, 0])

    def test_optimal_matches_hand_computation(self, rng):
        a = rng.standard_normal((5, 8))
        b = rng.standard_normal((8, 3))
        scores = [np.sqrt(sum(a[r, i] ** 2 for r in range(5))) * np.sqrt(sum(b[i, c] ** 2 for c in range(3))) for i in range(8)]
        expected = np.array(scores) / sum(scores)
        np.testing.assert_allclose(make_probabilities(a, b, "optimal").weights, expected, rtol=1e-13)

    @pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
    def test_nearly_optimal_lower_bound(self, rng, beta):
        a = rng.standard_normal((4, 10))
        b = rng.standard_normal((10, 6))
        opt = make_probabilities(a, b, "optimal").weights
        p = make_probabilities(a, b, "nearly-optimal", beta=beta).weights
        assert np.all(p >= beta * opt - 1e-15)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_product_falls_back_to_uniform(self):
        p = make_probabilities(np.zeros((2, 3)), np.ones((3, 2)), "optimal")
        np.testing.assert_allclose(p.weights, 1 / 3)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            make_probabilities(np.ones((2, 3)), np.ones((4, 2)))
        with pytest.raises(ValueError):
            make_probabilities(np.ones((2, 3)), np.ones((3, 2)), "bogus")
        with pytest.raises(ValueError):
            make_probabilities(np.ones((2, 3)), np.ones((3, 2)), "nearly_optimal", beta=0)

    def test_distribution_invariants(self):
        with pytest.raises(ValueError):
            ProbabilityDistribution(np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            ProbabilityDistribution(np.array([1.5, -0.5]))


class TestRandsample:
    def test_point_mass(self):
        s = randsample(5, ProbabilityDistribution(np.array([1.0, 0.0, 0.0])), RngStream(3))
        np.testing.assert_array_equal(s.indices, 0)
        np.testing.assert_allclose(s.scales, 1 / np.sqrt(5))

    def test_column_structure(self, rng):
        p = ProbabilityDistribution(rng.dirichlet(np.ones(6)))
        s = randsample(9, p, RngStream(4))
        dense = s.to_dense()
        assert dense.shape == (6, 9)
        assert np.all(np.count_nonzero(dense, axis=0) == 1)
        np.testing.assert_allclose(dense[s.indices, np.arange(9)], 1 / np.sqrt(9 * p.weights[s.indices]))

    def test_uniform_frequencies(self):
        size, draws = 10, 100_000
        s = randsample(draws, ProbabilityDistribution.uniform(size), RngStream(11))
        counts = np.bincount(s.indices, minlength=size)
        sigma = math.sqrt(draws * (1 / size) * (1 - 1 / size))
        assert np.all(np.abs(counts - draws / size) <= 3 * sigma)

    def test_zero_weights_never_drawn(self):
        w = np.array([0.0, 0.5, 0.0, 0.5, 0.0])
        s = randsample(20_000, ProbabilityDistribution(w), RngStream(2))
        assert set(np.unique(s.indices)) <= {1, 3}

    def test_expected_outer_product_is_identity(self):
        size, samples, trials = 5, 3, 10_000
        p = ProbabilityDistribution(np.array([0.1, 0.2, 0.3, 0.25, 0.15]))
        gen = np.random.default_rng(8)
        acc = np.zeros((size, size))
        for _ in range(trials):
            d = randsample(samples, p, gen).to_dense()
            acc += d @ d.T
        np.testing.assert_allclose(acc / trials, np.eye(size), atol=0.05)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            randsample(0, ProbabilityDistribution.uniform(3), RngStream(0))


class TestBasicMatrixMultiplication:
    def test_single_support_exact(self, rng):
        a = np.zeros((4, 6))
        a[:, 3] = rng.standard_normal(4)
        b = rng.standard_normal((6, 2))
        p = make_probabilities(a, b, "optimal")
        c, r = basic_matrix_multiplication(a, b, 4, p, RngStream(0))
        np.testing.assert_allclose(c @ r, a @ b, rtol=1e-14, atol=1e-14)

    def test_identity_mean(self):
        eye = np.eye(3)
        p = ProbabilityDistribution.uniform(3)
        gen = np.random.default_rng(12)
        acc = np.zeros((3, 3))
        for _ in range(10_000):
            c, r = basic_matrix_multiplication(eye, eye, 3, p, gen)
            est = c @ r
            np.testing.assert_array_equal(est, np.diag(np.diag(est)))
            acc += est
        np.testing.assert_allclose(acc / 10_000, eye, atol=0.05)

    def test_nearly_optimal_bound_frequency(self, rng):
        a = rng.standard_normal((6, 40))
        b = rng.standard_normal((40, 5))
        p = make_probabilities(a, b, "optimal")
        bound = amm_bound_nearly_optimal(a, b, 40, 1.0, 0.1)
        gen = np.random.default_rng(1)
        hits = 0
        for _ in range(500):
            c, r = basic_matrix_multiplication(a, b, 40, p, gen)
            hits += np.linalg.norm(a @ b - c @ r) <= bound
        assert hits >= 450

    def test_mean_error_shrinks(self, rng):
        a = rng.standard_normal((4, 20))
        b = rng.standard_normal((20, 3))
        p = make_probabilities(a, b, "optimal")
        gen = np.random.default_rng(5)
        errors = []
        acc = np.zeros((4, 3))
        for m in range(1, 4001):
            c, r = basic_matrix_multiplication(a, b, 5, p, gen)
            acc += c @ r
            if m in (100, 4000):
                errors.append(np.linalg.norm(acc / m - a @ b))
        assert errors[1] < errors[0]

    def test_errors(self, rng):
        a = rng.standard_normal((2, 4))
        b = rng.standard_normal((4, 2))
        p = ProbabilityDistribution.uniform(4)
        with pytest.raises(ValueError):
            basic_matrix_multiplication(a, b, 5, p, RngStream(0))
        with pytest.raises(ValueError):
            basic_matrix_multiplication(a, b, 0, p, RngStream(0))
        with pytest.raises(ValueError):
            basic_matrix_multiplication(a, b.T, 2, p, RngStream(0))
