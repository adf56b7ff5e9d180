"""Kernel evaluation, gradients, Gram assembly, and bandwidth selection.

Two kernel families are supported:

* ``GaussianKernel(bandwidth)``: k(x, y) = exp(-||x - y||^2 / bandwidth)
* ``LinearKernel()``:            k(x, y) = <x, y> + 1

Gram matrices are assembled once per unordered pair and mirrored, so
``gram(X)[i, j]`` and ``gram(X)[j, i]`` are bit-for-bit identical.
"""

import numpy as np

from ._validation import check_positions, check_same_dim, check_vector
from .errors import DegenerateEnsembleError, InsufficientParticlesError


def pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    """Dense matrix of squared Euclidean distances, clamped at zero."""
    g = x @ x.T
    sq = np.diag(g)
    d2 = sq[:, None] + sq[None, :] - 2.0 * g
    return np.maximum(d2, 0.0)


def _mirror(k: np.ndarray) -> np.ndarray:
    """Copy the strict upper triangle onto the lower one (exact symmetry).

    Not needed in one dimension: there every entry derives from a single
    commutative multiply/add per pair, so BLAS output is already bitwise
    symmetric; for d > 1 dot products may be tiled differently per triangle.
    """
    out = np.triu(k)
    out += np.triu(k, 1).T
    return out


class GaussianKernel:
    """Radial kernel exp(-||x - y||^2 / bandwidth) with bandwidth > 0."""

    def __init__(self, bandwidth: float):
        bandwidth = float(bandwidth)
        if not np.isfinite(bandwidth) or bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        self.bandwidth = bandwidth

    def __repr__(self):
        return f"GaussianKernel(bandwidth={self.bandwidth!r})"

    def __call__(self, x, y) -> float:
        x, y = check_vector(x), check_vector(y)
        check_same_dim(x, y)
        d = x - y
        return float(np.exp(-(d @ d) / self.bandwidth))

    def grad_first(self, x, y) -> np.ndarray:
        """Gradient in the first argument: -(2/bandwidth) (x - y) k(x, y)."""
        x, y = check_vector(x), check_vector(y)
        check_same_dim(x, y)
        d = x - y
        return -(2.0 / self.bandwidth) * d * np.exp(-(d @ d) / self.bandwidth)

    def gram(self, positions) -> np.ndarray:
        x = check_positions(positions)
        k = np.exp(-pairwise_sq_dists(x) / self.bandwidth)
        if x.shape[1] > 1:
            k = _mirror(k)
        np.fill_diagonal(k, 1.0)
        return k

    def repulsion(self, positions: np.ndarray, gram: np.ndarray) -> np.ndarray:
        """Row i holds (1/N) sum_j grad_first k(x_j, x_i)."""
        n = positions.shape[0]
        row_mass = gram.sum(axis=1)
        return (2.0 / (self.bandwidth * n)) * (
            positions * row_mass[:, None] - gram @ positions
        )


class LinearKernel:
    """Inner-product kernel <x, y> + 1 (offset fixed at one)."""

    offset = 1.0

    def __repr__(self):
        return "LinearKernel()"

    def __call__(self, x, y) -> float:
        x, y = check_vector(x), check_vector(y)
        check_same_dim(x, y)
        return float(x @ y + 1.0)

    def grad_first(self, x, y) -> np.ndarray:
        x, y = check_vector(x), check_vector(y)
        check_same_dim(x, y)
        return y.copy()

    def gram(self, positions) -> np.ndarray:
        x = check_positions(positions)
        k = x @ x.T
        k += 1.0
        return _mirror(k) if x.shape[1] > 1 else k

    def repulsion(self, positions: np.ndarray, gram: np.ndarray) -> np.ndarray:
        # grad_first k(x_j, x_i) = x_i independently of j, so the mean is x_i.
        return positions.copy()


def median_heuristic(positions) -> float:
    """Bandwidth med^2 / ln(N) from the median of pairwise distances.

    Uses the N(N-1)/2 unordered pairs (self-distances excluded); an even
    pair count takes the mean of the two central order statistics.
    """
    x = check_positions(positions)
    n = x.shape[0]
    if n < 2:
        raise InsufficientParticlesError("median heuristic needs at least 2 particles")
    iu = np.triu_indices(n, 1)
    med = float(np.median(np.sqrt(pairwise_sq_dists(x)[iu])))
    if med == 0.0:
        raise DegenerateEnsembleError("all particles coincide; median distance is zero")
    return med * med / np.log(n)
