import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salsa.tensor_core import core_tensor, fold, kronecker, mode_product, unfold, unvec, vec

from conftest import crandn, tucker_bruteforce


def _t222():
    t = np.zeros((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                t[i, j, k] = (i + 1) + 2 * j + 4 * k
    return t


def _unfold_elementwise(t, mode):
    # column index built with the lower remaining mode varying fastest
    dims = t.shape
    ax = mode - 1
    rest = [d for d in range(3) if d != ax]
    out = np.zeros((dims[ax], dims[rest[0]] * dims[rest[1]]), dtype=t.dtype)
    for idx in np.ndindex(*dims):
        col = idx[rest[0]] + idx[rest[1]] * dims[rest[0]]
        out[idx[ax], col] = t[idx]
    return out


class TestUnfold:
    def test_mode1_example(self):
        np.testing.assert_array_equal(unfold(_t222(), 1), [[1, 3, 5, 7], [2, 4, 6, 8]])

    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_matches_elementwise_definition(self, rng, mode):
        t = crandn(rng, 3, 4, 5)
        np.testing.assert_array_equal(unfold(t, mode), _unfold_elementwise(t, mode))

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2, 2)), 0)
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2)), 1)

    def test_tucker_unfolding_identities(self, rng):
        i1, i2, n_meas, j1, j2 = 2, 3, 4, 3, 2
        core = core_tensor(i1, i2)
        a = crandn(rng, n_meas, i1 * i2)
        b = crandn(rng, i1, j1)
        c = crandn(rng, i2, j2)
        y = tucker_bruteforce(core, a, b.T, c.T)
        np.testing.assert_allclose(unfold(y, 1), a @ unfold(core, 1) @ np.kron(c, b), rtol=1e-12)
        np.testing.assert_allclose(unfold(y, 2), b.T @ unfold(core, 2) @ np.kron(c, a.T), rtol=1e-12)
        np.testing.assert_allclose(unfold(y, 3), c.T @ unfold(core, 3) @ np.kron(b, a.T), rtol=1e-12)


class TestFold:
    def test_example_roundtrip(self):
        m = np.array([[1, 3, 5, 7], [2, 4, 6, 8]])
        np.testing.assert_array_equal(fold(m, 1, (2, 2, 2)), _t222())

    def test_scalar(self):
        t = fold(np.array([[5.0]]), 2, (1, 1, 1))
        assert t.shape == (1, 1, 1) and t[0, 0, 0] == 5.0

    def test_random_mode2_bit_exact(self, rng):
        m = crandn(rng, 3, 8)
        np.testing.assert_array_equal(unfold(fold(m, 2, (2, 3, 4)), 2), m)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fold(np.zeros((3, 7)), 2, (2, 3, 4))


dims = st.tuples(*[st.integers(1, 4)] * 3)


@settings(max_examples=50, deadline=None)
@given(dims=dims, mode=st.sampled_from([1, 2, 3]), seed=st.integers(0, 2**32 - 1))
def test_roundtrip_property(dims, mode, seed):
    t = crandn(np.random.default_rng(seed), *dims)
    np.testing.assert_array_equal(fold(unfold(t, mode), mode, dims), t)


@settings(max_examples=50, deadline=None)
@given(dims=dims, mode=st.sampled_from([1, 2, 3]), rows=st.integers(1, 4),
       seed=st.integers(0, 2**32 - 1))
def test_mode_product_property(dims, mode, rows, seed):
    rng = np.random.default_rng(seed)
    t = crandn(rng, *dims)
    m = crandn(rng, rows, dims[mode - 1])
    out = mode_product(t, m, mode)
    expected = m @ unfold(t, mode)
    np.testing.assert_allclose(unfold(out, mode), expected, rtol=1e-12, atol=1e-12)


class TestModeProduct:
    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_identity(self, rng, mode):
        t = crandn(rng, 2, 3, 4)
        np.testing.assert_array_equal(mode_product(t, np.eye(t.shape[mode - 1]), mode), t)

    def test_summation(self):
        out = mode_product(np.ones((2, 2, 2)), np.array([[1, 1]]), 1)
        assert out.shape == (1, 2, 2)
        np.testing.assert_array_equal(out, 2)

    def test_unfolding_identity(self, rng):
        t = crandn(rng, 3, 4, 5)
        m = crandn(rng, 2, 4)
        out = mode_product(t, m, 2)
        assert out.shape == (3, 2, 5)
        # elementwise: out[i, p, k] = sum_j m[p, j] t[i, j, k]
        brute = np.einsum("pj,ijk->ipk", m, t)
        np.testing.assert_allclose(out, brute, rtol=1e-13)
        np.testing.assert_allclose(unfold(out, 2), m @ unfold(t, 2), rtol=1e-13)

    def test_mismatch(self, rng):
        with pytest.raises(ValueError):
            mode_product(np.zeros((2, 3, 4)), np.zeros((2, 2)), 2)


class TestKroneckerVec:
    def test_identity_left(self, rng):
        b = crandn(rng, 2, 3)
        k = kronecker(np.eye(2), b)
        np.testing.assert_array_equal(k[:2, :3], b)
        np.testing.assert_array_equal(k[2:, 3:], b)
        np.testing.assert_array_equal(k[:2, 3:], 0)

    def test_scalar_left(self, rng):
        b = crandn(rng, 3, 2)
        np.testing.assert_array_equal(kronecker([[2]], b), 2 * b)

    def test_elementwise(self, rng):
        a = crandn(rng, 2, 3)
        b = crandn(rng, 4, 5)
        k = kronecker(a, b)
        assert k.shape == (8, 15)
        for i1 in range(2):
            for i2 in range(4):
                for c1 in range(3):
                    for c2 in range(5):
                        assert np.isclose(k[i1 * 4 + i2, c1 * 5 + c2], a[i1, c1] * b[i2, c2],
                                          rtol=1e-15, atol=0)

    def test_vec(self):
        np.testing.assert_array_equal(vec([[1, 3], [2, 4]]).ravel(), [1, 2, 3, 4])
        m = np.arange(6).reshape(2, 3)
        np.testing.assert_array_equal(unvec(vec(m), 2, 3), m)

    def test_vec_kron_identity(self, rng):
        a = crandn(rng, 3, 2)
        x = crandn(rng, 2, 4)
        b = crandn(rng, 5, 4)
        np.testing.assert_allclose(vec(a @ x @ b.T), np.kron(b, a) @ vec(x), rtol=1e-13)


class TestCoreTensor:
    def test_scalar(self):
        s = core_tensor(1, 1)
        assert s.shape == (1, 1, 1) and s[0, 0, 0] == 1

    def test_identity_unfolding(self):
        s = core_tensor(2, 2)
        assert s.shape == (4, 2, 2)
        np.testing.assert_array_equal(unfold(s, 1), np.eye(4))
        assert np.issubdtype(s.dtype, np.integer)

    @pytest.mark.parametrize("i1,i2,j1,j2", [(2, 3, 4, 2), (3, 1, 2, 5), (1, 4, 3, 3)])
    def test_kronecker_duality(self, rng, i1, i2, j1, j2):
        b = crandn(rng, i1, j1)
        c = crandn(rng, i2, j2)
        s = core_tensor(i1, i2)
        t = tucker_bruteforce(s, np.eye(i1 * i2), b.T, c.T)
        np.testing.assert_allclose(unfold(t, 1), np.kron(c, b), rtol=1e-13)
        t2 = mode_product(mode_product(s, b.T, 2), c.T, 3)
        np.testing.assert_allclose(unfold(t2, 1), np.kron(c, b), rtol=1e-13)
