import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import loop_unfold
from rtucker.tensor import (
    as_tensor,
    contract,
    fold,
    frobenius_norm,
    inner_product,
    kronecker,
    mode_n_product,
    multi_mode_product,
    unfold,
    unfold_columns,
)


@pytest.fixture
def t222():
    # a[i1, i2, i3] = i1 + 2(i2 - 1) + 4(i3 - 1) with 1-based indices
    t = np.empty((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                t[i, j, k] = (i + 1) + 2 * j + 4 * k
    return t


class TestUnfold:
    def test_matrix_mode0_is_identity(self, rng):
        m = rng.standard_normal((3, 4))
        np.testing.assert_array_equal(unfold(m, 0), m)

    def test_small_example_mode0(self, t222):
        np.testing.assert_array_equal(unfold(t222, 0), [[1, 3, 5, 7], [2, 4, 6, 8]])
        np.testing.assert_array_equal(unfold(t222, 0), loop_unfold(t222, 0))

    def test_small_example_mode2(self, t222):
        np.testing.assert_array_equal(unfold(t222, 2), [[1, 2, 3, 4], [5, 6, 7, 8]])
        np.testing.assert_array_equal(unfold(t222, 2), loop_unfold(t222, 2))

    def test_matches_loop_oracle_order4(self, rng):
        t = rng.standard_normal((2, 3, 4, 2))
        for n in range(4):
            np.testing.assert_array_equal(unfold(t, n), loop_unfold(t, n))

    def test_bad_mode(self, t222):
        with pytest.raises(ValueError):
            unfold(t222, 3)
        with pytest.raises(ValueError):
            unfold(t222, -1)


class TestFold:
    def test_roundtrip(self, t222):
        np.testing.assert_array_equal(fold(unfold(t222, 1), 1, t222.shape), t222)

    def test_column_to_order3(self):
        out = fold(np.array([[1.0], [2.0]]), 0, (2, 1, 1))
        assert out.shape == (2, 1, 1)
        np.testing.assert_array_equal(out.ravel(), [1.0, 2.0])

    def test_example_values(self, t222):
        out = fold(unfold(t222, 0), 0, (2, 2, 2))
        np.testing.assert_array_equal(out.ravel(order="F"), np.arange(1, 9))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fold(np.zeros((2, 3)), 0, (2, 2, 2))


@settings(max_examples=60, deadline=None)
@given(
    dims=st.lists(st.integers(1, 4), min_size=1, max_size=4),
    seed=st.integers(0, 2**32 - 1),
)
def test_fold_unfold_identity_property(dims, seed):
    t = np.random.default_rng(seed).standard_normal(dims)
    for n in range(len(dims)):
        np.testing.assert_array_equal(fold(unfold(t, n), n, t.shape), t)


class TestUnfoldColumns:
    def test_matches_full_unfolding(self, rng):
        t = rng.standard_normal((3, 4, 5, 2))
        for n in range(t.ndim):
            full = unfold(t, n)
            cols = rng.integers(0, full.shape[1], size=7)
            np.testing.assert_array_equal(unfold_columns(t, n, cols), full[:, cols])

    def test_vector(self):
        v = np.arange(4.0)
        np.testing.assert_array_equal(unfold_columns(v, 0, [0, 0]), [[0, 0], [1, 1], [2, 2], [3, 3]])


class TestModeProduct:
    def test_identity(self, rng):
        t = rng.standard_normal((3, 4, 5))
        for n in range(3):
            np.testing.assert_allclose(mode_n_product(t, np.eye(t.shape[n]), n), t, rtol=0, atol=1e-15)

    def test_ones_example(self):
        out = mode_n_product(np.ones((2, 2, 2)), np.ones((1, 2)), 0)
        assert out.shape == (1, 2, 2)
        np.testing.assert_array_equal(out, 2.0)

    def test_distinct_modes_commute(self, rng):
        t = rng.standard_normal((3, 4, 5))
        f = rng.standard_normal((6, 3))
        g = rng.standard_normal((2, 4))
        one = mode_n_product(mode_n_product(t, f, 0), g, 1)
        two = mode_n_product(mode_n_product(t, g, 1), f, 0)
        np.testing.assert_allclose(one, two, rtol=1e-12, atol=1e-12)

    def test_unfolding_relation(self, rng):
        t = rng.standard_normal((3, 4, 5))
        for n in range(3):
            b = rng.standard_normal((2, t.shape[n]))
            np.testing.assert_allclose(unfold(mode_n_product(t, b, n), n), b @ unfold(t, n), rtol=1e-12)

    def test_same_mode_composes(self, rng):
        t = rng.standard_normal((3, 4, 5))
        f = rng.standard_normal((6, 4))
        h = rng.standard_normal((2, 6))
        np.testing.assert_allclose(
            mode_n_product(mode_n_product(t, f, 1), h, 1), mode_n_product(t, h @ f, 1), rtol=1e-12
        )

    def test_orthonormal_does_not_grow_norm(self, rng):
        t = rng.standard_normal((5, 4, 3))
        q, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        assert frobenius_norm(mode_n_product(t, q.T, 0)) <= frobenius_norm(t) * (1 + 1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            mode_n_product(np.ones((2, 3)), np.ones((2, 2)), 1)

    def test_multi_mode_transpose(self, rng):
        t = rng.standard_normal((3, 4, 5))
        us = [rng.standard_normal((d, 2)) for d in t.shape]
        expected = t
        for n, u in enumerate(us):
            expected = mode_n_product(expected, u.T, n)
        np.testing.assert_allclose(multi_mode_product(t, us, transpose=True), expected)


def test_tucker_unfolding_kronecker_relation(rng):
    dims, ranks = (4, 5, 3), (2, 3, 2)
    core = rng.standard_normal(ranks)
    us = [rng.standard_normal((d, r)) for d, r in zip(dims, ranks)]
    full = multi_mode_product(core, us)
    for n in range(3):
        others = [us[m] for m in reversed(range(3)) if m != n]
        kr = others[0]
        for u in others[1:]:
            kr = kronecker(kr, u)
        expected = us[n] @ unfold(core, n) @ kr.T
        assert np.linalg.norm(unfold(full, n) - expected) <= 1e-10


class TestContract:
    def test_vectors(self):
        out = contract(np.array([1.0, 2, 3]), np.array([4.0, 5, 6]), 0, 0)
        assert out.shape == ()
        assert float(out) == 32.0

    def test_matrix_product(self, rng):
        a = rng.standard_normal((2, 3))
        b = rng.standard_normal((3, 4))
        np.testing.assert_allclose(contract(a, b, 1, 0), a @ b, rtol=1e-14)

    def test_gram_total(self, rng):
        t = rng.standard_normal((3, 2, 4))
        gram = unfold(t, 0).T @ unfold(t, 0)
        np.testing.assert_allclose(contract(t, t, 0, 0).sum(), gram.sum(), rtol=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            contract(np.ones((2, 3)), np.ones((2, 3)), 1, 0)


class TestNorms:
    def test_ones(self):
        assert frobenius_norm(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8), rel=1e-15)

    def test_zero(self):
        assert frobenius_norm(np.zeros((3, 3))) == 0

    def test_equals_unfolding_norms(self, rng):
        t = rng.standard_normal((3, 3, 3))
        direct = np.sqrt(sum(x * x for x in t.ravel()))
        for n in range(3):
            assert np.linalg.norm(unfold(t, n)) == pytest.approx(direct, rel=1e-14)
        assert frobenius_norm(t) == pytest.approx(direct, rel=1e-14)

    def test_inner_product(self, rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4))
        assert inner_product(a, a) == pytest.approx(frobenius_norm(a) ** 2, rel=1e-14)
        assert inner_product(a, np.zeros_like(a)) == 0
        assert inner_product(a, b) == pytest.approx(inner_product(b, a), rel=1e-15)
        with pytest.raises(ValueError):
            inner_product(a, np.ones((4, 3)))


class TestKronecker:
    def test_identity(self):
        np.testing.assert_array_equal(kronecker(np.eye(2), np.eye(3)), np.eye(6))

    def test_scalar(self, rng):
        b = rng.standard_normal((2, 3))
        np.testing.assert_array_equal(kronecker(np.array([[2.0]]), b), 2 * b)

    def test_mixed_product(self, rng):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((4, 5))
        x, y = rng.standard_normal(3), rng.standard_normal(5)
        lhs = kronecker(a, b) @ np.kron(x, y)
        np.testing.assert_allclose(lhs, np.kron(a @ x, b @ y), rtol=1e-12)


def test_as_tensor_rejects_empty():
    with pytest.raises(ValueError):
        as_tensor(np.zeros((2, 0)))
    with pytest.raises(ValueError):
        as_tensor(3.0)
