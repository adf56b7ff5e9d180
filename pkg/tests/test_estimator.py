import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from steinflow.estimator import RSVGDSampler
from steinflow.kernels import GaussianKernel, median_heuristic
from steinflow.sampler import AdagradStep, EnsembleState, svgd_step
from steinflow.targets import GaussianMixture1D, GaussianTarget

TARGET = GaussianTarget([0.0], [[1.0]])


def cloud(n=25, seed=0):
    return np.random.default_rng(seed).normal(-4.0, 1.0, size=(n, 1))


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = RSVGDSampler(target=TARGET, nu=0.2, n_iter=7)
        params = est.get_params()
        assert params["nu"] == 0.2
        assert params["n_iter"] == 7
        rebuilt = RSVGDSampler(**params)
        assert rebuilt.get_params() == params

    def test_clone(self):
        est = RSVGDSampler(target=TARGET, nu=0.3, step_size=0.5)
        twin = clone(est)
        ours = {k: v for k, v in est.get_params().items() if k != "target"}
        theirs = {k: v for k, v in twin.get_params().items() if k != "target"}
        assert ours == theirs
        assert isinstance(twin.target, GaussianTarget)  # deep-copied, not shared

    def test_set_params(self):
        est = RSVGDSampler(target=TARGET).set_params(nu=0.7, solver="cg")
        assert est.nu == 0.7
        assert est.solver == "cg"


class TestFit:
    def test_fit_sets_attributes(self):
        est = RSVGDSampler(target=TARGET, nu=0.5, n_iter=10)
        est.fit(cloud())
        assert est.particles_.shape == (25, 1)
        assert est.n_iter_ == 10
        assert len(est.wall_ms_) == 10
        assert len(est.trajectory_) == 11

    def test_fit_transform_returns_particles(self):
        est = RSVGDSampler(target=TARGET, nu=1.0, n_iter=5)
        out = est.fit_transform(cloud())
        assert out is est.particles_

    def test_deterministic(self):
        x = cloud(seed=3)
        a = RSVGDSampler(target=TARGET, nu=0.4, n_iter=8).fit_transform(x)
        b = RSVGDSampler(target=TARGET, nu=0.4, n_iter=8).fit_transform(x)
        assert np.array_equal(a, b)

    def test_does_not_mutate_input(self):
        x = cloud(seed=5)
        before = x.copy()
        RSVGDSampler(target=TARGET, n_iter=3).fit(x)
        assert np.array_equal(x, before)

    def test_moves_toward_target(self):
        mixture = GaussianMixture1D([0.5, 0.5], [-1.0, 1.0], [1.0, 1.0])
        x = cloud(n=60, seed=9)
        out = RSVGDSampler(target=mixture, nu=0.5, step_size=1.0,
                           n_iter=150).fit_transform(x)
        assert abs(out.mean()) < 1.0  # started at -4

    def test_nu_one_matches_dedicated_svgd_loop(self):
        x = cloud(n=30, seed=1)
        est = RSVGDSampler(target=TARGET, nu=1.0, step="adagrad", step_size=0.3,
                           n_iter=6, bandwidth="median_per_iter")
        est.fit(x)
        state = EnsembleState(x.copy())
        for _ in range(6):
            kern = GaussianKernel(median_heuristic(state.positions))
            state = svgd_step(state, kern, TARGET, AdagradStep(0.3))
        assert np.array_equal(est.particles_, state.positions)

    def test_fixed_bandwidth(self):
        est = RSVGDSampler(target=TARGET, bandwidth=2.5, n_iter=2)
        est.fit(cloud())
        assert est.particles_.shape == (25, 1)

    def test_linear_kernel(self):
        est = RSVGDSampler(target=TARGET, kernel="linear", nu=0.5,
                           step="constant", step_size=0.05, n_iter=4)
        out = est.fit_transform(np.random.default_rng(0).normal(0, 2, (40, 1)))
        assert np.all(np.isfinite(out))


class TestValidation:
    def test_requires_target(self):
        with pytest.raises(ValueError, match="target"):
            RSVGDSampler().fit(cloud())

    def test_unknown_kernel(self):
        with pytest.raises(ValueError, match="kernel"):
            RSVGDSampler(target=TARGET, kernel="imq").fit(cloud())

    def test_unknown_bandwidth(self):
        with pytest.raises(ValueError, match="bandwidth"):
            RSVGDSampler(target=TARGET, bandwidth="scott").fit(cloud())

    def test_unknown_step(self):
        with pytest.raises(ValueError, match="step"):
            RSVGDSampler(target=TARGET, step="momentum").fit(cloud())

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            RSVGDSampler(target=TARGET).fitted_particles

    def test_rejects_nonfinite_input(self):
        with pytest.raises(ValueError):
            RSVGDSampler(target=TARGET).fit(np.array([[np.nan]]))
