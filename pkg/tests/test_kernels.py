import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from steinflow.errors import (DegenerateEnsembleError, DimensionMismatchError,
                              InsufficientParticlesError)
from steinflow.kernels import GaussianKernel, LinearKernel, median_heuristic
from steinflow.linalg import sym_eigen

from _oracles import central_difference_gradient

RNG = np.random.default_rng(2024)


class TestEval:
    def test_gaussian_zero_distance(self):
        k = GaussianKernel(1.0)
        assert k(np.zeros(3), np.zeros(3)) == 1.0

    def test_gaussian_unit_distance(self):
        k = GaussianKernel(1.0)
        assert_allclose(k([0.0], [1.0]), np.exp(-1.0), rtol=1e-15)

    def test_linear_at_origin(self):
        assert LinearKernel()([0.0], [0.0]) == 1.0

    def test_gaussian_range(self):
        k = GaussianKernel(0.7)
        for _ in range(50):
            x, y = RNG.normal(size=(2, 4))
            assert 0.0 < k(x, y) <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            GaussianKernel(1.0)(np.zeros(2), np.zeros(3))

    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_symmetry(self, dim, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(2, dim))
        for k in (GaussianKernel(0.8), LinearKernel()):
            assert k(x, y) == k(y, x)


class TestGradient:
    def test_gaussian_stationary_at_coincidence(self):
        k = GaussianKernel(2.0)
        assert_allclose(k.grad_first(np.ones(3), np.ones(3)), np.zeros(3))

    def test_gaussian_frozen(self):
        # -(2/gamma)(x - y) k with x - y = -1
        k = GaussianKernel(1.0)
        assert_allclose(k.grad_first([0.0], [1.0]), [2.0 * np.exp(-1.0)], rtol=1e-15)

    def test_linear_frozen(self):
        assert_allclose(LinearKernel().grad_first([3.0], [5.0]), [5.0])

    @pytest.mark.parametrize("kernel", [GaussianKernel(0.9), LinearKernel()])
    def test_matches_finite_differences(self, kernel):
        for _ in range(25):
            x, y = RNG.normal(size=(2, 3))
            num = central_difference_gradient(lambda z: kernel(z, y), x)
            ana = kernel.grad_first(x, y)
            assert_allclose(ana, num, rtol=1e-6, atol=1e-9)

    def test_gaussian_antisymmetry(self):
        k = GaussianKernel(1.3)
        for _ in range(25):
            x, y = RNG.normal(size=(2, 2))
            assert_allclose(k.grad_first(x, y), -k.grad_first(y, x), rtol=1e-14)


class TestGram:
    def test_single_particle(self):
        assert_allclose(GaussianKernel(1.0).gram([[0.5]]), [[1.0]])

    def test_two_particles_gaussian(self):
        g = GaussianKernel(1.0).gram([[0.0], [1.0]])
        e = np.exp(-1.0)
        assert_allclose(g, [[1.0, e], [e, 1.0]], rtol=1e-15)

    def test_two_particles_linear(self):
        assert_allclose(LinearKernel().gram([[1.0], [2.0]]), [[2.0, 3.0], [3.0, 5.0]])

    def test_matches_pairwise_eval(self):
        x = RNG.normal(size=(7, 3))
        for kernel in (GaussianKernel(0.6), LinearKernel()):
            g = kernel.gram(x)
            for i in range(7):
                for j in range(7):
                    assert_allclose(g[i, j], kernel(x[i], x[j]), rtol=1e-12)

    def test_bitwise_symmetry_and_unit_diagonal(self):
        x = RNG.normal(size=(40, 2)) * 5.0
        g = GaussianKernel(0.5).gram(x)
        assert np.array_equal(g, g.T)
        assert np.all(np.diag(g) == 1.0)
        gl = LinearKernel().gram(x)
        assert np.array_equal(gl, gl.T)

    @pytest.mark.parametrize("n", [5, 20, 50])
    def test_positive_semidefinite(self, n):
        x = np.random.default_rng(n).normal(size=(n, 2))
        vals, _ = sym_eigen(GaussianKernel(1.1).gram(x))
        assert vals[0] >= -1e-8 * max(1.0, vals[-1])


class TestMedianHeuristic:
    def test_two_points(self):
        assert_allclose(median_heuristic([[0.0], [1.0]]), 1.0 / np.log(2.0), rtol=1e-14)

    def test_two_points_wider(self):
        assert_allclose(median_heuristic([[0.0], [2.0]]), 4.0 / np.log(2.0), rtol=1e-14)

    def test_even_pair_count_uses_central_mean(self):
        # distances {1, 2, 3, 3, 4, 6} have median (3 + 3) / 2 = 3 ... use a
        # 4-point line {0,1,3,6}: distances 1,3,6,2,5,3 -> median 3
        gamma = median_heuristic([[0.0], [1.0], [3.0], [6.0]])
        assert_allclose(gamma, 9.0 / np.log(4.0), rtol=1e-14)

    def test_degenerate_ensemble(self):
        with pytest.raises(DegenerateEnsembleError):
            median_heuristic([[0.0], [0.0], [0.0]])

    def test_insufficient_particles(self):
        with pytest.raises(InsufficientParticlesError):
            median_heuristic([[0.0]])

    def test_positive_on_random_clouds(self):
        for _ in range(10):
            assert median_heuristic(RNG.normal(size=(12, 3))) > 0.0


def test_bandwidth_must_be_positive():
    with pytest.raises(ValueError):
        GaussianKernel(0.0)
    with pytest.raises(ValueError):
        GaussianKernel(-1.0)
