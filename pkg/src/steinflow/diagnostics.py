"""Stein-discrepancy and Fisher-type functionals.

``ksd_vstat`` is the V-statistic (diagonal terms included) of the Stein
kernel; it equals the squared RKHS norm of the kernel-embedded score
difference at the empirical measure. ``reg_ksd`` evaluates the regularized
quadratic form <beta, ((1-nu) T + nu I)^{-1} beta> through the identity

    ((1-nu) T + nu I)^{-1} = (1/nu) (I - (1-nu) i* ((1-nu) i i* + nu I)^{-1} i)

which reduces the infinite-dimensional inverse to an N x N solve against
the Gram matrix (T = i* i is the kernel integral operator). The identity
is validated against an explicit finite-dimensional operator evaluation in
the test suite.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nu, check_positions, check_square
from .errors import UnsupportedKernelError, UnsupportedTargetError
from .kernels import GaussianKernel
from .linalg import SolveConfig, cholesky, solve_regularized, solve_spd
from .sampler import drift
from .targets import true_moment

NEGATIVE_CLAMP = 1e-8


def ksd_vstat(positions, kernel, target) -> float:
    """Averaged Stein-kernel double sum (1/N^2) sum_ij u_pi(x_i, x_j)."""
    if not isinstance(kernel, GaussianKernel):
        raise UnsupportedKernelError("KSD needs the Gaussian kernel's mixed derivatives")
    x = check_positions(positions)
    n, d = x.shape
    gamma = kernel.bandwidth
    k = kernel.gram(x)
    score = target.grad_potential(x)  # grad V rows
    diff = x[:, None, :] - x[None, :, :]
    sq = np.einsum("ijd,ijd->ij", diff, diff)
    u = (score @ score.T) * k
    u -= (2.0 / gamma) * k * np.einsum("id,ijd->ij", score, diff)
    u += (2.0 / gamma) * k * np.einsum("jd,ijd->ij", score, diff)
    u += k * (2.0 * d / gamma - (4.0 / gamma**2) * sq)
    return float(u.sum() / n**2)


def reg_ksd(positions, kernel, target, nu, cfg: SolveConfig = SolveConfig()) -> float:
    """Regularized Stein-Fisher value at the empirical measure.

    Equals (1/nu) * (ksd_vstat - (1-nu) <v, g>_N) with v the drift values and
    g the regularized-system solve of v; reduces to ksd_vstat at nu = 1.
    """
    nu = check_nu(nu)
    x = check_positions(positions)
    base = ksd_vstat(x, kernel, target)
    if nu == 1.0:
        return base
    n = x.shape[0]
    k = kernel.gram(x)
    v = drift(x, kernel, target, gram=k)
    g = solve_regularized(k, (1.0 - nu) / n, nu, v, cfg)
    correction = (1.0 - nu) * float((v * g).sum()) / n
    return (base - correction) / nu


@dataclass(frozen=True)
class SpectralModel:
    """Operator eigenvalues (descending, positive) with score coefficients."""

    eigenvalues: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        c = np.asarray(self.coefficients, dtype=np.float64)
        if lam.shape != c.shape or lam.ndim != 1:
            raise ValueError("eigenvalues and coefficients must be equal-length vectors")
        if np.any(lam <= 0.0):
            raise ValueError("eigenvalues must be positive")
        if np.any(np.diff(lam) > 0.0):
            raise ValueError("eigenvalues must be non-increasing")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "coefficients", c)


def spectral_fisher(m: SpectralModel) -> float:
    """Fisher information sum |c_i|^2."""
    return float(np.sum(m.coefficients**2))


def spectral_stein(m: SpectralModel) -> float:
    """Stein-Fisher information sum lambda_i |c_i|^2."""
    return float(np.sum(m.eigenvalues * m.coefficients**2))


def spectral_reg_stein(m: SpectralModel, nu: float) -> float:
    """Regularized form sum lambda_i / ((1-nu) lambda_i + nu) |c_i|^2."""
    nu = check_nu(nu)
    lam = m.eigenvalues
    return float(np.sum(lam / ((1.0 - nu) * lam + nu) * m.coefficients**2))


def source_norm_sq(m: SpectralModel, gamma: float) -> float:
    """Squared norm of the order-gamma pre-image, sum lambda_i^{-2 gamma} |c_i|^2."""
    if not 0.0 < gamma <= 0.5:
        raise ValueError("source order gamma must lie in (0, 1/2]")
    return float(np.sum(m.eigenvalues ** (-2.0 * gamma) * m.coefficients**2))


def sandwich_check(m: SpectralModel, gamma: float, nu: float) -> str:
    """Two-sided Fisher comparison under the small-regularization condition.

    When nu/(1-nu) <= (I / (2 ||J||^2))^(1/(2 gamma)), the regularized value
    must satisfy (1/2)(1-nu)^{-1} I <= value <= (1-nu)^{-1} I. Returns
    "holds", "fails", or "condition_violated" when the gate is not met.
    """
    nu = check_nu(nu, allow_one=False)
    fisher = spectral_fisher(m)
    j_sq = source_norm_sq(m, gamma)
    if j_sq > 0.0:
        bound = (fisher / (2.0 * j_sq)) ** (1.0 / (2.0 * gamma))
        if nu / (1.0 - nu) > bound:
            return "condition_violated"
    value = spectral_reg_stein(m, nu)
    upper = fisher / (1.0 - nu)
    lower = 0.5 * upper
    tol = 1e-12 * max(1.0, upper)
    return "holds" if (lower - tol <= value <= upper + tol) else "fails"


def _check_spd_pair(s, q):
    s = check_square(s, "s")
    q = check_square(q, "q")
    if s.shape != q.shape:
        raise ValueError("covariance shapes differ")
    for name, a in (("s", s), ("q", q)):
        if not np.allclose(a, a.T, atol=1e-10 * max(1.0, float(np.abs(a).max()))):
            raise ValueError(f"{name} must be symmetric")
    return s, q


def gaussian_kl(s, q) -> float:
    """KL(N(0, S) | N(0, Q)) = (tr(Q^{-1} S) - d + ln det Q - ln det S) / 2."""
    s, q = _check_spd_pair(s, q)
    d = s.shape[0]
    ls = cholesky(s)
    lq = cholesky(q)
    logdet_s = 2.0 * float(np.sum(np.log(np.diag(ls))))
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(lq))))
    trace = float(np.trace(solve_spd(q, s)))
    return 0.5 * (trace - d + logdet_q - logdet_s)


def gaussian_fisher(s, q) -> float:
    """Fisher information trace(S (Q^{-1} - S^{-1})' (Q^{-1} - S^{-1}))."""
    s, q = _check_spd_pair(s, q)
    eye = np.eye(s.shape[0])
    m = solve_spd(q, eye) - solve_spd(s, eye)
    return float(np.trace(s @ m.T @ m))


@dataclass
class DiagReport:
    """Nonnegative discrepancy values; tiny negative noise is clamped to 0."""

    ksd2: float
    reg_ksd2: float
    mse: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ksd2 = clamp_nonnegative(self.ksd2, "ksd2")
        self.reg_ksd2 = clamp_nonnegative(self.reg_ksd2, "reg_ksd2")
        self.mse = {k: clamp_nonnegative(v, f"mse[{k}]") for k, v in self.mse.items()}


def clamp_nonnegative(value: float, name: str = "value") -> float:
    """Zero out floating-point noise on a provably nonnegative quantity."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} is not finite")
    if value < -NEGATIVE_CLAMP * max(1.0, abs(value)):
        raise ValueError(f"{name} is negative beyond rounding noise: {value}")
    return max(value, 0.0)


def mse_report(ensembles, target, h3_params, ksd2: float = 0.0,
               reg_ksd2: float = 0.0) -> DiagReport:
    """Replicate-averaged squared error of ensemble means of h1, h2, h3.

    `ensembles` holds one particle matrix per replicate and `h3_params` the
    matching (omega, b) draws used for that replicate's h3.
    """
    if len(ensembles) != len(h3_params):
        raise ValueError("one (omega, b) pair is needed per replicate")
    errs = {"h1": [], "h2": [], "h3": []}
    for x, (omega, b) in zip(ensembles, h3_params):
        x = check_positions(x)
        if x.shape[1] != 1:
            raise UnsupportedTargetError("moment MSE is defined for 1-d ensembles")
        errs["h1"].append((float(x.mean()) - true_moment(target, "h1")) ** 2)
        errs["h2"].append((float((x**2).mean()) - true_moment(target, "h2")) ** 2)
        truth3 = true_moment(target, "h3", omega, b)
        errs["h3"].append((float(np.cos(omega * x + b).mean()) - truth3) ** 2)
    mse = {k: float(np.mean(v)) for k, v in errs.items()}
    return DiagReport(ksd2=ksd2, reg_ksd2=reg_ksd2, mse=mse)
