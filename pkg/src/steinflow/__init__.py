"""Regularized Stein variational gradient descent toolkit."""

from .config import ExperimentConfig, parse_config, serialize_config
from .diagnostics import (DiagReport, SpectralModel, gaussian_fisher, gaussian_kl,
                          ksd_vstat, mse_report, reg_ksd, sandwich_check,
                          spectral_fisher, spectral_reg_stein, spectral_stein)
from .estimator import RSVGDSampler
from .gaussian_flow import (MatrixFlowState, continuous_rhs, discrete_step,
                            rk4_integrate, schedule_params, kl_product_bound_check)
from .kernels import GaussianKernel, LinearKernel, median_heuristic
from .linalg import SolveConfig, cholesky, solve_regularized, solve_spd, sym_eigen
from .sampler import (AdagradStep, ConstantStep, EnsembleState, drift,
                      regularized_direction, rsvgd_step, run, svgd_step)
from .targets import (CustomTarget, GaussianInit, GaussianMixture1D, GaussianTarget,
                      true_moment)

__version__ = "0.1.0"

__all__ = [
    "AdagradStep", "ConstantStep", "CustomTarget", "DiagReport", "EnsembleState",
    "ExperimentConfig", "GaussianInit", "GaussianKernel", "GaussianMixture1D",
    "GaussianTarget", "LinearKernel", "MatrixFlowState", "RSVGDSampler",
    "SolveConfig", "SpectralModel", "cholesky", "continuous_rhs", "discrete_step", "drift", "gaussian_fisher", "gaussian_kl", "ksd_vstat",
    "median_heuristic", "mse_report", "parse_config", "reg_ksd",
    "regularized_direction", "rk4_integrate", "rsvgd_step", "run",
    "sandwich_check", "schedule_params", "serialize_config", "solve_regularized",
    "solve_spd",
    "spectral_fisher", "spectral_reg_stein", "spectral_stein", "svgd_step",
    "sym_eigen", "kl_product_bound_check", "true_moment",
]
