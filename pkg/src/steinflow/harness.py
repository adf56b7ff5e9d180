"""Seeded experiment execution, replicate management, CSV output, timing.

Replicate r draws from a generator seeded with ``seed XOR r``; the (omega, b)
pair for the oscillatory test function is drawn first (omega ~ N(0,1),
b ~ U[0, 2 pi]), then the initial particles. Rows are always written in
(replicate, iteration) order with 17-significant-digit decimals and LF line
endings, so a run CSV is byte-reproducible from (config, seed) alone as
long as timing capture is off (the default; see [run] record_timing).

The STEINFLOW_THREADS environment variable caps the replicate worker pool
(default: machine parallelism).
"""

import gc
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig
from .diagnostics import clamp_nonnegative, gaussian_kl, ksd_vstat, mse_report, reg_ksd
from .errors import ConfigError, MaxIterExceededError, NotSPDError
from .gaussian_flow import MatrixFlowState, discrete_step, schedule_params, kl_product_bound_check
from .kernels import GaussianKernel, LinearKernel, median_heuristic
from .sampler import ConstantStep, EnsembleState, rsvgd_step, run
from .targets import true_moment

RESULT_HEADER = ("replicate", "iteration", "wall_ms", "ksd2", "reg_ksd2",
                 "mse_h1", "mse_h2", "mse_h3")
BENCH_HEADER = ("n_particles", "regularized_ms", "svgd_ms", "overhead_ms")
ORACLE_HEADER = ("iteration", "rel_frob_err", "kl_closed", "bound_rhs")
DIAGNOSE_HEADER = ("replicate", "iteration", "ksd2", "reg_ksd2")

BENCH_WARMUP = 3
BENCH_TIMED = 20
BENCH_REPEATS = 5


class SolverFailure(RuntimeError):
    """A replicate aborted on a linear-solver error; partial rows were kept."""


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: str, header, rows) -> None:
    """UTF-8, LF-terminated CSV with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _worker_count() -> int:
    raw = os.environ.get("STEINFLOW_THREADS", "")
    if raw:
        count = int(raw)
        if count < 1:
            raise ValueError("STEINFLOW_THREADS must be at least 1")
        return count
    return os.cpu_count() or 1


def _replicate_rng(cfg: ExperimentConfig, rep: int):
    return np.random.default_rng(cfg.seed ^ rep)


def _require_gaussian_kernel(cfg: ExperimentConfig, command: str):
    if cfg.kernel_family != "gaussian":
        raise ConfigError("kernel.family",
                          f"{command} records KSD columns and needs family=gaussian")


def _diag_kernel(cfg, positions):
    if isinstance(cfg.bandwidth, float):
        return GaussianKernel(cfg.bandwidth)
    return GaussianKernel(median_heuristic(positions))


def _replicate_rows(cfg: ExperimentConfig, rep: int, with_mse: bool):
    """Rows for one replicate; returns (rows, error) and keeps partial rows."""
    target = cfg.build_target()
    rng = _replicate_rng(cfg, rep)
    omega = float(rng.standard_normal())
    b = float(rng.uniform(0.0, 2.0 * np.pi))
    x0 = cfg.build_init().sample(cfg.n_particles, cfg.dim, rng=rng)
    kernel, policy = cfg.build_kernel(x0)
    solve_cfg = cfg.build_solve_config()
    nu = cfg.nu_value()
    state = EnsembleState(x0)

    def metrics(positions, iteration, wall):
        kern = _diag_kernel(cfg, positions)
        current_nu = nu if np.isscalar(nu) else nu[min(iteration, len(nu) - 1)]
        ksd = clamp_nonnegative(ksd_vstat(positions, kern, target), "ksd2")
        reg = clamp_nonnegative(reg_ksd(positions, kern, target, current_nu, solve_cfg),
                                "reg_ksd2")
        row = [rep, iteration, wall, ksd, reg]
        if with_mse:
            report = mse_report([positions], target, [(omega, b)])
            row += [report.mse["h1"], report.mse["h2"], report.mse["h3"]]
        return row

    rows = []
    step = cfg.build_step()
    try:
        rows.append(metrics(state.positions, 0, 0.0))
        for i in range(cfg.n_iters):
            nu_i = nu if np.isscalar(nu) else nu[i]
            t0 = time.perf_counter()
            kern = kernel
            if policy == "median_per_iter":
                kern = GaussianKernel(median_heuristic(state.positions))
            state = rsvgd_step(state, kern, target, nu_i, step, solve_cfg)
            wall = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else 0.0
            if (i + 1) % cfg.record_every == 0 or i + 1 == cfg.n_iters:
                rows.append(metrics(state.positions, i + 1, wall))
    except (NotSPDError, MaxIterExceededError) as exc:
        sentinel = [rep, state.iteration + 1, 0.0] + [float("nan")] * (5 if with_mse else 2)
        rows.append(sentinel)
        return rows, exc
    return rows, None


def _run_replicates(cfg: ExperimentConfig, with_mse: bool):
    reps = range(cfg.replicates)
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(lambda r: _replicate_rows(cfg, r, with_mse), reps))
    rows = []
    failure = None
    for rep_rows, err in results:
        rows.extend(rep_rows)
        failure = failure or err
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows, failure


def run_experiment(cfg: ExperimentConfig, output: str | None = None) -> str:
    """Run all replicates and write the result CSV; returns its path."""
    _require_gaussian_kernel(cfg, "run")
    true_moment(cfg.build_target(), "h1")  # closed-form moments must exist
    path = output or cfg.output
    rows, failure = _run_replicates(cfg, with_mse=True)
    write_csv(path, RESULT_HEADER, rows)
    if failure is not None:
        raise SolverFailure(f"run aborted on solver error: {failure}") from failure
    return path


def diagnose(cfg: ExperimentConfig, output: str | None = None) -> str:
    """Write the KSD / regularized-KSD trajectory only."""
    _require_gaussian_kernel(cfg, "diagnose")
    path = output or cfg.output
    rows, failure = _run_replicates(cfg, with_mse=False)
    write_csv(path, DIAGNOSE_HEADER, [row[:2] + row[3:] for row in rows])
    if failure is not None:
        raise SolverFailure(f"diagnose aborted on solver error: {failure}") from failure
    return path


def sweep(cfg: ExperimentConfig, nus, particle_counts, output: str | None = None) -> str:
    """Cross product of nu values and particle counts, one block per combination."""
    _require_gaussian_kernel(cfg, "sweep")
    path = output or cfg.output
    all_rows = []
    for nu in nus:
        for count in particle_counts:
            sub = replace(cfg, nu=(float(nu),), n_particles=int(count))
            rows, failure = _run_replicates(sub, with_mse=True)
            if failure is not None:
                raise SolverFailure(f"sweep aborted on solver error: {failure}") from failure
            all_rows.extend([float(nu), int(count)] + row for row in rows)
    write_csv(path, ("nu", "n_particles") + RESULT_HEADER, all_rows)
    return path


def _timed_run_ms(cfg: ExperimentConfig, count: int, nu: float, timed: int) -> float:
    """Mean per-iteration milliseconds over `timed` iterations past warmup."""
    sub = replace(cfg, n_particles=count, nu=(nu,), n_iters=BENCH_WARMUP + timed)
    rng = _replicate_rng(sub, 0)
    rng.standard_normal()
    rng.uniform()
    x0 = sub.build_init().sample(sub.n_particles, sub.dim, rng=rng)
    kernel, policy = sub.build_kernel(x0)
    result = run(EnsembleState(x0), kernel, sub.build_target(), nu,
                 sub.build_step(), sub.n_iters, sub.build_solve_config(),
                 bandwidth=policy, record_every=sub.n_iters or 1)
    return float(np.mean(result.wall_ms[BENCH_WARMUP:]))


def bench_timing(cfg: ExperimentConfig, particle_counts, output: str | None = None,
                 timed_iterations: int = BENCH_TIMED) -> str:
    """Mean per-iteration wall-clock of the regularized and plain updates.

    Per particle count the regularized and nu = 1 runs are measured in
    alternation for BENCH_REPEATS rounds (warmup iterations excluded,
    garbage collection paused); each path reports its lowest round mean,
    which rejects rounds contaminated by background load. Overhead is the
    regularized minus the nu = 1 time, isolating the Gram-system assembly,
    factorization, and solve.
    """
    counts = [int(c) for c in particle_counts]
    if counts != sorted(counts):
        raise ValueError("particle counts must be sorted ascending")
    timed = max(int(timed_iterations), BENCH_TIMED)
    nu = cfg.nu_value()
    if not np.isscalar(nu) or nu >= 1.0:
        raise ConfigError("sampler.nu", "bench needs a constant nu < 1 to compare against nu = 1")
    path = output or cfg.output
    rows = []
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        for count in counts:
            reg_rounds, plain_rounds = [], []
            for _ in range(BENCH_REPEATS):
                reg_rounds.append(_timed_run_ms(cfg, count, float(nu), timed))
                plain_rounds.append(_timed_run_ms(cfg, count, 1.0, timed))
            reg_ms, plain_ms = min(reg_rounds), min(plain_rounds)
            rows.append([count, reg_ms, plain_ms, reg_ms - plain_ms])
    finally:
        if gc_was_on:
            gc.enable()
    write_csv(path, BENCH_HEADER, rows)
    return path


def gaussian_oracle(cfg: ExperimentConfig, delta: float, output: str | None = None) -> str:
    """Track particle covariance against the closed-form covariance recursion.

    Needs a mean-zero Gaussian target, the linear kernel, and a mean-zero
    Gaussian init whose covariance commutes with the target covariance.
    The per-step (nu, h) come from the Fisher-ratio schedule evaluated on
    the closed-form iterate. Columns: iteration, relative Frobenius error
    of the empirical (uncentered) covariance, closed-form KL, and the
    product bound with the log-Sobolev constant min eig(Q).
    """
    if cfg.target_kind != "gaussian":
        raise ConfigError("target.kind", "gaussian-oracle needs a Gaussian target")
    if any(m != 0.0 for m in cfg.mean):
        raise ConfigError("target.mean", "gaussian-oracle needs a mean-zero target")
    if cfg.kernel_family != "linear":
        raise ConfigError("kernel.family", "gaussian-oracle needs the linear kernel")
    if any(m != 0.0 for m in cfg.init_mean):
        raise ConfigError("sampler.init_mean", "gaussian-oracle needs a mean-zero init")
    d = cfg.dim
    q = np.diag(cfg.variance)
    std = np.asarray(cfg.init_std, dtype=np.float64)
    if std.size == 1:
        std = np.full(d, std[0])
    s0 = np.diag(std**2)
    if not np.allclose(s0 @ q, q @ s0, atol=1e-12):
        raise ConfigError("sampler.init_std", "init covariance must commute with the target covariance")
    target = cfg.build_target()
    solve_cfg = cfg.build_solve_config()
    rng = _replicate_rng(cfg, 0)
    x = cfg.build_init().sample(cfg.n_particles, d, rng=rng)
    state = EnsembleState(x)
    closed = MatrixFlowState(s0, q)
    lam = float(np.min(cfg.variance))
    kl0 = gaussian_kl(s0, q)
    bound = kl0
    rows = []
    schedule = []
    trajectory = [closed]
    for n in range(cfg.n_iters + 1):
        emp = state.positions.T @ state.positions / cfg.n_particles
        rel = float(np.linalg.norm(emp - closed.s) / np.linalg.norm(closed.s))
        rows.append([n, rel, gaussian_kl(closed.s, closed.q), bound])
        if n == cfg.n_iters:
            break
        nu, h = schedule_params(closed, delta)
        schedule.append((nu, h))
        closed = discrete_step(closed, nu, h)
        trajectory.append(closed)
        state = rsvgd_step(state, LinearKernel(), target, nu, ConstantStep(h), solve_cfg)
        bound *= 1.0 - 0.5 * lam * h / (1.0 - nu)
    verdict = kl_product_bound_check(trajectory, schedule, lam)
    path = output or cfg.output
    write_csv(path, ORACLE_HEADER, rows)
    if verdict.verdict != "holds":
        raise RuntimeError(
            f"closed-form KL violates the decay bound at step {verdict.first_violation}"
        )
    return path
