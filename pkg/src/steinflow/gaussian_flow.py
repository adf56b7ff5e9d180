"""Closed-form covariance flows for a Gaussian target with the linear kernel.

For target N(0, Q) and kernel <x, y> + 1, Gaussians stay Gaussian along the
regularized flow, so the whole dynamics reduces to a covariance matrix.
With A = ((1 - nu) S + nu I)^{-1} and E = S^{-1} - Q^{-1}:

* continuous:  dS/dt = 2 A S - A S^2 Q^{-1} - Q^{-1} A S^2
* discrete:    S' = S + h (A E S^2 + S A E S) + h^2 A E S^3 E A

These serve as the exact oracle the particle sampler is checked against.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._validation import check_nu, check_positive, check_square
from .diagnostics import gaussian_fisher, gaussian_kl
from .errors import (DegenerateScheduleError, NotSPDError, ScheduleInvalidError,
                     StepTooLargeError)
from .linalg import cholesky, solve_spd, sym_eigen

KL_BOUND_SLACK = 1e-9


def _check_spd(a, name):
    a = check_square(a, name)
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, float(np.abs(a).max()))):
        raise ValueError(f"{name} must be symmetric")
    cholesky(a)
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class MatrixFlowState:
    """Current covariance s, target covariance q, and the step counter."""

    s: np.ndarray
    q: np.ndarray
    step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "s", _check_spd(self.s, "s"))
        object.__setattr__(self, "q", _check_spd(self.q, "q"))
        if self.s.shape != self.q.shape:
            raise ValueError("s and q must have the same shape")


def _inv(a):
    return solve_spd(a, np.eye(a.shape[0]))


def discrete_step(state: MatrixFlowState, nu: float, h: float) -> MatrixFlowState:
    """One covariance recursion step; symmetrized after assembly."""
    nu = check_nu(nu, allow_one=False)
    check_positive(h, "h")
    s, q = state.s, state.q
    eye = np.eye(s.shape[0])
    a = solve_spd((1.0 - nu) * s + nu * eye, eye)
    e = _inv(s) - _inv(q)
    aes = a @ e @ s
    s_new = s + h * (aes @ s + s @ aes) + h * h * (aes @ s @ s @ e @ a)
    s_new = 0.5 * (s_new + s_new.T)
    try:
        cholesky(s_new)
    except NotSPDError as exc:
        raise StepTooLargeError(
            f"step h={h} lost positive definiteness at flow step {state.step}"
        ) from exc
    return MatrixFlowState(s_new, q, state.step + 1)


def continuous_rhs(sigma, q, nu: float) -> np.ndarray:
    """Right-hand side of the covariance ODE."""
    nu = check_nu(nu, allow_one=False)
    sigma = _check_spd(sigma, "sigma")
    q = _check_spd(q, "q")
    eye = np.eye(sigma.shape[0])
    a = solve_spd((1.0 - nu) * sigma + nu * eye, eye)
    q_inv = _inv(q)
    s2 = sigma @ sigma
    return 2.0 * a @ sigma - a @ s2 @ q_inv - q_inv @ a @ s2


def rk4_integrate(state: MatrixFlowState, nu: float, dt: float, steps: int):
    """Classical fourth-order Runge-Kutta trajectory for the covariance ODE."""
    check_positive(dt, "dt")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    out = [state]
    for _ in range(steps):
        s, q = state.s, state.q
        try:
            k1 = continuous_rhs(s, q, nu)
            k2 = continuous_rhs(s + 0.5 * dt * k1, q, nu)
            k3 = continuous_rhs(s + 0.5 * dt * k2, q, nu)
            k4 = continuous_rhs(s + dt * k3, q, nu)
        except NotSPDError as exc:
            raise StepTooLargeError(f"dt={dt} left the SPD cone") from exc
        s_new = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s_new = 0.5 * (s_new + s_new.T)
        try:
            state = MatrixFlowState(s_new, q, state.step + 1)
        except NotSPDError as exc:
            raise StepTooLargeError(f"dt={dt} left the SPD cone") from exc
        out.append(state)
    return out


def schedule_params(state: MatrixFlowState, delta: float):
    """Per-step (nu, h) from the Fisher ratio rule.

    nu solves nu/(1-nu) = I(S|Q) / (2 ||Q^{-1} - S^{-1}||_F^2) and
    h = delta * min_k((1-nu) sigma_k + nu) over the eigenvalues of S.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    fisher = gaussian_fisher(state.s, state.q)
    diff = _inv(state.q) - _inv(state.s)
    denom = 2.0 * float(np.sum(diff * diff))
    if denom == 0.0 or fisher == 0.0:
        raise DegenerateScheduleError("schedule undefined at the fixed point S = Q")
    ratio = fisher / denom
    nu = ratio / (1.0 + ratio)
    sigma_min = float(sym_eigen(state.s)[0][0])
    h = delta * ((1.0 - nu) * sigma_min + nu)
    return nu, h


class BoundCheck(NamedTuple):
    verdict: str
    first_violation: Optional[int]


def kl_product_bound_check(trajectory, schedule, lam: float) -> BoundCheck:
    """Check KL(S_n | Q) against the product decay bound.

    The bound is KL(S_0 | Q) * prod_i (1 - lam h_i / (2 (1 - nu_i))) with
    lam the log-Sobolev constant (smallest eigenvalue of Q); a product
    factor outside (0, 1] means the schedule itself is invalid.
    """
    check_positive(lam, "lam")
    if len(schedule) < len(trajectory) - 1:
        raise ValueError("schedule history shorter than the trajectory")
    bound = gaussian_kl(trajectory[0].s, trajectory[0].q)
    for n, state in enumerate(trajectory):
        if n > 0:
            nu, h = schedule[n - 1]
            factor = 1.0 - 0.5 * lam * h / (1.0 - nu)
            if factor <= 0.0:
                raise ScheduleInvalidError(
                    f"decay factor {factor} at step {n} is not positive"
                )
            bound *= factor
        if gaussian_kl(state.s, state.q) > bound + KL_BOUND_SLACK:
            return BoundCheck("fails", n)
    return BoundCheck("holds", None)
