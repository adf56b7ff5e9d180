"""Regularized SVGD particle updates and run loop.

One iteration moves the particle matrix X (rows are particles) by

    X <- X - h * solve((1 - nu)/N * K + nu * I, v)

where K is the kernel Gram matrix and v is the drift whose row i is

    v_i = (1/N) sum_j [ k(x_i, x_j) grad V(x_j) - grad_1 k(x_j, x_i) ].

At nu = 1 the system matrix is the identity and the solve is bypassed,
which reproduces plain SVGD exactly (X <- X - h * v equals the classical
update along the negated optimal RKHS direction).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nu, check_positions, check_positive
from .kernels import GaussianKernel, median_heuristic
from .linalg import SolveConfig, solve_regularized


@dataclass
class EnsembleState:
    """Particle positions plus iteration and Adagrad bookkeeping."""

    positions: np.ndarray
    iteration: int = 0
    adagrad_accum: np.ndarray | None = None

    def __post_init__(self):
        self.positions = check_positions(self.positions)
        if self.adagrad_accum is None:
            self.adagrad_accum = np.zeros_like(self.positions)
        else:
            self.adagrad_accum = np.asarray(self.adagrad_accum, dtype=np.float64)
            if self.adagrad_accum.shape != self.positions.shape:
                raise ValueError("adagrad_accum shape must match positions")
            if np.any(self.adagrad_accum < 0.0):
                raise ValueError("adagrad_accum must be nonnegative")

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class ConstantStep:
    """Fixed step size h > 0."""

    size: float

    def __post_init__(self):
        check_positive(self.size, "step size")

    def apply(self, accum, direction):
        return self.size * direction, accum


@dataclass(frozen=True)
class AdagradStep:
    """Elementwise rate base / (fudge + sqrt(accumulated squared direction)).

    The accumulator collects the solved direction, so the nu = 1 case matches
    standard Adagrad SVGD practice.
    """

    base: float
    fudge: float = 1e-6

    def __post_init__(self):
        check_positive(self.base, "adagrad base rate")
        check_positive(self.fudge, "adagrad fudge factor")

    def apply(self, accum, direction):
        accum = accum + direction * direction
        rate = self.base / (self.fudge + np.sqrt(accum))
        return rate * direction, accum


def _as_step(step):
    return ConstantStep(float(step)) if np.isscalar(step) else step


def drift(positions, kernel, target, gram=None) -> np.ndarray:
    """Drift rows v_i; the negation of the classical SVGD direction."""
    x = check_positions(positions)
    k = kernel.gram(x) if gram is None else gram
    grad_v = target.grad_potential(x)
    return (k @ grad_v) / x.shape[0] - kernel.repulsion(x, k)


def regularized_direction(positions, kernel, target, nu, cfg=SolveConfig(), gram=None):
    """Solved direction g = ((1-nu)/N K + nu I)^{-1} v, with v the drift."""
    x = check_positions(positions)
    nu = check_nu(nu)
    k = kernel.gram(x) if gram is None else gram
    v = drift(x, kernel, target, gram=k)
    if nu == 1.0:
        return v, v
    g = solve_regularized(k, (1.0 - nu) / x.shape[0], nu, v, cfg)
    return g, v


def rsvgd_step(state: EnsembleState, kernel, target, nu, step, cfg=SolveConfig(),
               gram=None) -> EnsembleState:
    """One regularized SVGD update; `step` is a step size or a step rule."""
    step = _as_step(step)
    g, _ = regularized_direction(state.positions, kernel, target, nu, cfg, gram=gram)
    delta, accum = step.apply(state.adagrad_accum, g)
    return EnsembleState(state.positions - delta, state.iteration + 1, accum)


def svgd_step(state: EnsembleState, kernel, target, step, gram=None) -> EnsembleState:
    """Plain SVGD update (no linear solve); identical arithmetic to nu = 1."""
    step = _as_step(step)
    g = drift(state.positions, kernel, target, gram=gram)
    delta, accum = step.apply(state.adagrad_accum, g)
    return EnsembleState(state.positions - delta, state.iteration + 1, accum)


@dataclass
class RunResult:
    """Recorded trajectory plus per-iteration wall-clock in milliseconds."""

    states: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    recorded_iterations: list = field(default_factory=list)

    @property
    def final(self) -> EnsembleState:
        return self.states[-1]


def _nu_sequence(nu, n_iters):
    if np.isscalar(nu):
        return [check_nu(nu)] * n_iters
    seq = [check_nu(v) for v in nu]
    if len(seq) < n_iters:
        raise ValueError(
            f"nu sequence has {len(seq)} entries but the run needs {n_iters}"
        )
    return seq


def run(state: EnsembleState, kernel, target, nu, step, n_iters: int,
        cfg=SolveConfig(), bandwidth="fixed", record_every: int = 1) -> RunResult:
    """Iterate rsvgd_step, recording every `record_every` iterations.

    bandwidth "median_per_iter" refreshes a Gaussian kernel's bandwidth from
    the current ensemble before each step; "fixed" keeps the kernel as given.
    """
    if n_iters < 0:
        raise ValueError("n_iters must be nonnegative")
    if bandwidth not in ("fixed", "median_per_iter"):
        raise ValueError(f"unknown bandwidth policy {bandwidth!r}")
    if bandwidth == "median_per_iter" and not isinstance(kernel, GaussianKernel):
        raise ValueError("median_per_iter applies to Gaussian kernels only")
    nus = _nu_sequence(nu, n_iters)
    step = _as_step(step)
    out = RunResult(states=[state], wall_ms=[], recorded_iterations=[state.iteration])
    for i in range(n_iters):
        t0 = time.perf_counter()
        kern = kernel
        if bandwidth == "median_per_iter":
            kern = GaussianKernel(median_heuristic(state.positions))
        if nus[i] == 1.0:
            state = svgd_step(state, kern, target, step)
        else:
            state = rsvgd_step(state, kern, target, nus[i], step, cfg)
        out.wall_ms.append((time.perf_counter() - t0) * 1e3)
        if (i + 1) % record_every == 0 or i + 1 == n_iters:
            out.states.append(state)
            out.recorded_iterations.append(state.iteration)
    return out
