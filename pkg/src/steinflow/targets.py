"""Target densities pi ~ exp(-V): scores, closed-form moments, and init sampling.

The normalization constant is never needed: every operation works with the
potential gradient grad V = -grad log pi and the unnormalized log density.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_positions, check_square, check_vector
from .errors import EvaluationError, UnsupportedTargetError


class GaussianTarget:
    """N(mean, covariance) target with symmetric positive definite covariance."""

    def __init__(self, mean, covariance):
        self.mean = check_vector(mean, "mean")
        cov = check_square(covariance, "covariance")
        if cov.shape[0] != self.mean.shape[0]:
            raise ValueError("mean and covariance dimensions differ")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        # eigendecomposition doubles as the SPD check and gives a stable inverse
        w, v = np.linalg.eigh(cov)
        if w.min() <= 0.0:
            raise ValueError("covariance must be positive definite")
        self.covariance = cov
        self._precision = (v / w) @ v.T

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_density(self, x) -> float:
        """Unnormalized log pi(x) = -(x-m)' Q^{-1} (x-m) / 2."""
        d = check_vector(x) - self.mean
        return float(-0.5 * d @ self._precision @ d)

    def grad_potential(self, x) -> np.ndarray:
        """grad V at one point (d,) or row-wise for a batch (n, d)."""
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 1:
            return self._precision @ (arr - self.mean)
        return (check_positions(arr) - self.mean) @ self._precision


class GaussianMixture1D:
    """One-dimensional Gaussian mixture sum_j w_j N(mu_j, sigma_j^2)."""

    def __init__(self, weights, means, variances):
        self.weights = check_vector(weights, "weights")
        self.means = check_vector(means, "means")
        self.variances = check_vector(variances, "variances")
        if not (self.weights.shape == self.means.shape == self.variances.shape):
            raise ValueError("weights, means, variances must have equal length")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if np.any(self.weights < 0.0):
            raise ValueError("mixture weights must be nonnegative")
        if np.any(self.variances <= 0.0):
            raise ValueError("mixture variances must be positive")

    dim = 1

    def _log_comp(self, x):
        # x: (..., 1) -> per-component log w_j N(x; mu_j, s_j), shape (..., m)
        z = (x - self.means) ** 2 / self.variances
        return np.log(self.weights) - 0.5 * np.log(2.0 * np.pi * self.variances) - 0.5 * z

    def log_density(self, x) -> float:
        x = check_vector(x)
        lc = self._log_comp(x)
        m = lc.max()
        return float(m + np.log(np.exp(lc - m).sum()))

    def grad_potential(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        pts = arr.reshape(-1, 1)
        lc = self._log_comp(pts)
        lc -= lc.max(axis=1, keepdims=True)
        resp = np.exp(lc)
        resp /= resp.sum(axis=1, keepdims=True)
        score = (resp * (-(pts - self.means) / self.variances)).sum(axis=1)
        out = -score.reshape(arr.shape if arr.ndim > 0 else (1,))
        return out if arr.ndim else out[0]


class CustomTarget:
    """Target given by an unnormalized log-density callback.

    Without a gradient callback, scores come from central differences with
    per-coordinate step 1e-5 * max(1, |x_i|).
    """

    def __init__(self, log_density, grad=None, dim: int = 1):
        self._log_density = log_density
        self._grad = grad
        self.dim = dim

    def log_density(self, x) -> float:
        val = float(self._log_density(check_vector(x)))
        if not np.isfinite(val):
            raise EvaluationError(f"log-density is not finite at {x}")
        return val

    def _grad_point(self, x: np.ndarray) -> np.ndarray:
        if self._grad is not None:
            return -np.asarray(self._grad(x), dtype=np.float64)
        g = np.empty_like(x)
        for i in range(x.shape[0]):
            h = 1e-5 * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            g[i] = -(self.log_density(xp) - self.log_density(xm)) / (2.0 * h)
        return g

    def grad_potential(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 1:
            return self._grad_point(arr)
        pts = check_positions(arr)
        return np.stack([self._grad_point(p) for p in pts])


MOMENT_FUNCTIONS = ("h1", "h2", "h3")


def true_moment(target, fn: str, omega: float = 0.0, b: float = 0.0) -> float:
    """Exact E[h(x)] under a 1-d Gaussian or mixture target.

    h1(x) = x, h2(x) = x^2, h3(x) = cos(omega x + b); for h3 the Gaussian
    smoothing identity E[cos(w x + b)] = cos(w mu + b) exp(-w^2 s^2 / 2)
    is applied per component.
    """
    if fn not in MOMENT_FUNCTIONS:
        raise ValueError(f"unknown test function {fn!r}")
    if isinstance(target, GaussianTarget):
        if target.dim != 1:
            raise UnsupportedTargetError("closed-form moments need a 1-d target")
        w = np.ones(1)
        mu = target.mean
        var = np.diag(target.covariance)
    elif isinstance(target, GaussianMixture1D):
        w, mu, var = target.weights, target.means, target.variances
    else:
        raise UnsupportedTargetError("closed-form moments need a Gaussian or mixture target")
    if fn == "h1":
        return float(w @ mu)
    if fn == "h2":
        return float(w @ (var + mu**2))
    return float(w @ (np.cos(omega * mu + b) * np.exp(-0.5 * omega**2 * var)))


@dataclass(frozen=True)
class GaussianInit:
    """Seeded per-coordinate Normal(mean, std^2) initial distribution."""

    mean: float = 0.0
    std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if np.any(np.asarray(self.std) <= 0.0):
            raise ValueError("init std must be positive")

    def sample(self, n: int, d: int, rng=None) -> np.ndarray:
        """n i.i.d. rows; deterministic given the seed when rng is None."""
        if n < 1:
            raise ValueError("need n >= 1 samples")
        if rng is None:
            rng = np.random.default_rng(self.seed)
        return rng.normal(self.mean, self.std, size=(n, d))
