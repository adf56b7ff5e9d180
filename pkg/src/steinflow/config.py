"""Experiment configuration: a flat sectioned key/value document.

Sections and keys (defaults in parentheses):

[target]
    preset      fig1 expands to the two-mode benchmark target
                (1/3) N(-2,1) + (2/3) N(2,1) with init N(-10,1), an
                Adagrad base rate of 2.0, and 20 replicates; explicit
                keys override it
    kind        gaussian | mixture1d (required unless preset is given)
    mean        comma list of per-coordinate means        (gaussian)
    variance    comma list of per-coordinate variances    (gaussian, diagonal)
    weights     comma list summing to 1                   (mixture1d)
    means       comma list                                (mixture1d)
    variances   comma list, positive                      (mixture1d)

[kernel]
    family      gaussian | linear (gaussian)
    bandwidth   median | median_per_iter | positive float (median_per_iter)

[sampler]
    n_particles     (100)
    n_iters         (100)
    nu              float in (0,1] or comma list, one per iteration (1.0)
    step            adagrad | constant (adagrad)
    step_size       (0.1)
    fudge           (1e-6)
    solver          cholesky | cg (cholesky)
    cg_tol          (1e-10)
    cg_max_iter     (1000)
    cg_precondition (false)
    init_mean       comma list or scalar (0.0)
    init_std        comma list or scalar, positive (1.0)

[run]
    seed            (0)
    replicates      (1)
    output          (results.csv)
    record_every    (1)
    record_timing   false keeps run CSVs byte-reproducible; true records
                    measured per-iteration wall-clock (false)

Unknown sections or keys are rejected; every error names the offending
entry as "section.key".
"""

import configparser
import io
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .kernels import GaussianKernel, LinearKernel, median_heuristic
from .linalg import SolveConfig
from .sampler import AdagradStep, ConstantStep
from .targets import GaussianInit, GaussianMixture1D, GaussianTarget

_FIG1 = {
    ("target", "kind"): "mixture1d",
    ("target", "weights"): "0.3333333333333333333, 0.6666666666666666666",
    ("target", "means"): "-2, 2",
    ("target", "variances"): "1, 1",
    ("sampler", "init_mean"): "-10",
    ("sampler", "init_std"): "1",
    ("sampler", "step"): "adagrad",
    ("sampler", "step_size"): "2.0",
    ("run", "replicates"): "20",
}

_KNOWN_KEYS = {
    "target": {"preset", "kind", "mean", "variance", "weights", "means", "variances"},
    "kernel": {"family", "bandwidth"},
    "sampler": {"n_particles", "n_iters", "nu", "step", "step_size", "fudge",
                "solver", "cg_tol", "cg_max_iter", "cg_precondition",
                "init_mean", "init_std"},
    "run": {"seed", "replicates", "output", "record_every", "record_timing"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    target_kind: str = "mixture1d"
    mean: tuple = (0.0,)
    variance: tuple = (1.0,)
    weights: tuple = (1.0,)
    means: tuple = (0.0,)
    variances: tuple = (1.0,)
    kernel_family: str = "gaussian"
    bandwidth: object = "median_per_iter"
    n_particles: int = 100
    n_iters: int = 100
    nu: tuple = (1.0,)
    step_kind: str = "adagrad"
    step_size: float = 0.1
    fudge: float = 1e-6
    solver: str = "cholesky"
    cg_tol: float = 1e-10
    cg_max_iter: int = 1000
    cg_precondition: bool = False
    init_mean: tuple = (0.0,)
    init_std: tuple = (1.0,)
    seed: int = 0
    replicates: int = 1
    output: str = "results.csv"
    record_every: int = 1
    record_timing: bool = False

    def build_target(self):
        if self.target_kind == "gaussian":
            return GaussianTarget(list(self.mean), np.diag(self.variance))
        return GaussianMixture1D(list(self.weights), list(self.means),
                                 list(self.variances))

    def build_kernel(self, positions=None):
        """Kernel instance plus the run-loop bandwidth policy."""
        if self.kernel_family == "linear":
            return LinearKernel(), "fixed"
        if isinstance(self.bandwidth, float):
            return GaussianKernel(self.bandwidth), "fixed"
        if positions is None:
            raise ValueError("median bandwidth needs initial positions")
        gamma = median_heuristic(positions)
        policy = "median_per_iter" if self.bandwidth == "median_per_iter" else "fixed"
        return GaussianKernel(gamma), policy

    def build_step(self):
        if self.step_kind == "adagrad":
            return AdagradStep(self.step_size, self.fudge)
        return ConstantStep(self.step_size)

    def build_solve_config(self):
        return SolveConfig(self.solver, self.cg_tol, self.cg_max_iter,
                           self.cg_precondition)

    def build_init(self, seed=None):
        mean = self.init_mean[0] if len(self.init_mean) == 1 else list(self.init_mean)
        std = self.init_std[0] if len(self.init_std) == 1 else list(self.init_std)
        return GaussianInit(mean, std, self.seed if seed is None else seed)

    @property
    def dim(self) -> int:
        if self.target_kind == "gaussian":
            return len(self.mean)
        return 1

    def nu_value(self):
        return self.nu[0] if len(self.nu) == 1 else list(self.nu)


def _fail(section, key, msg):
    raise ConfigError(f"{section}.{key}", msg)


class _Reader:
    def __init__(self, parser):
        self.parser = parser

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return default

    def floats(self, section, key, default):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return tuple(float(tok) for tok in text.split(","))
        except ValueError:
            _fail(section, key, f"expected a number or comma list, got {text!r}")

    def number(self, section, key, default, integer=False):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return int(text) if integer else float(text)
        except ValueError:
            kind = "an integer" if integer else "a number"
            _fail(section, key, f"expected {kind}, got {text!r}")

    def boolean(self, section, key, default):
        text = self.raw(section, key)
        if text is None:
            return default
        low = text.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        _fail(section, key, f"expected a boolean, got {text!r}")

    def choice(self, section, key, default, allowed):
        text = self.raw(section, key, default)
        if text not in allowed:
            _fail(section, key, f"must be one of {sorted(allowed)}, got {text!r}")
        return text


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("document", f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(section, "unknown section")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                _fail(section, key, "unknown key")

    preset = parser.get("target", "preset", fallback=None)
    if preset is not None:
        if preset != "fig1":
            _fail("target", "preset", f"unknown preset {preset!r}")
        for (section, key), value in _FIG1.items():
            if not parser.has_section(section):
                parser.add_section(section)
            if not parser.has_option(section, key):
                parser.set(section, key, value)

    r = _Reader(parser)
    kind = r.choice("target", "kind", None, {"gaussian", "mixture1d", None})
    if kind is None:
        _fail("target", "kind", "required (or use a preset)")

    kw = {}
    kw["target_kind"] = kind
    kw["mean"] = r.floats("target", "mean", (0.0,))
    kw["variance"] = r.floats("target", "variance", (1.0,))
    kw["weights"] = r.floats("target", "weights", (1.0,))
    kw["means"] = r.floats("target", "means", (0.0,))
    kw["variances"] = r.floats("target", "variances", (1.0,))
    if kind == "gaussian":
        if len(kw["mean"]) != len(kw["variance"]):
            _fail("target", "variance", "mean and variance lengths differ")
        if any(v <= 0.0 for v in kw["variance"]):
            _fail("target", "variance", "variances must be positive")
    else:
        if not len(kw["weights"]) == len(kw["means"]) == len(kw["variances"]):
            _fail("target", "weights", "weights, means, variances lengths differ")
        if abs(sum(kw["weights"]) - 1.0) > 1e-12:
            _fail("target", "weights", "weights must sum to 1")
        if any(v <= 0.0 for v in kw["variances"]):
            _fail("target", "variances", "variances must be positive")

    kw["kernel_family"] = r.choice("kernel", "family", "gaussian",
                                   {"gaussian", "linear"})
    bw = r.raw("kernel", "bandwidth", "median_per_iter")
    if bw not in ("median", "median_per_iter"):
        try:
            bw = float(bw)
        except ValueError:
            _fail("kernel", "bandwidth",
                  f"expected median, median_per_iter, or a number, got {bw!r}")
        if bw <= 0.0:
            _fail("kernel", "bandwidth", "bandwidth must be positive")
    kw["bandwidth"] = bw

    kw["n_particles"] = r.number("sampler", "n_particles", 100, integer=True)
    kw["n_iters"] = r.number("sampler", "n_iters", 100, integer=True)
    if kw["n_particles"] < 1:
        _fail("sampler", "n_particles", "must be at least 1")
    if kw["n_iters"] < 0:
        _fail("sampler", "n_iters", "must be nonnegative")
    kw["nu"] = r.floats("sampler", "nu", (1.0,))
    for value in kw["nu"]:
        if not 0.0 < value <= 1.0:
            _fail("sampler", "nu", f"must lie in (0, 1], got {value}")
    if len(kw["nu"]) > 1 and len(kw["nu"]) < kw["n_iters"]:
        _fail("sampler", "nu", f"sequence shorter than n_iters={kw['n_iters']}")
    kw["step_kind"] = r.choice("sampler", "step", "adagrad", {"adagrad", "constant"})
    kw["step_size"] = r.number("sampler", "step_size", 0.1)
    if kw["step_size"] <= 0.0:
        _fail("sampler", "step_size", "must be positive")
    kw["fudge"] = r.number("sampler", "fudge", 1e-6)
    if kw["fudge"] <= 0.0:
        _fail("sampler", "fudge", "must be positive")
    kw["solver"] = r.choice("sampler", "solver", "cholesky", {"cholesky", "cg"})
    kw["cg_tol"] = r.number("sampler", "cg_tol", 1e-10)
    if kw["cg_tol"] <= 0.0:
        _fail("sampler", "cg_tol", "must be positive")
    kw["cg_max_iter"] = r.number("sampler", "cg_max_iter", 1000, integer=True)
    if kw["cg_max_iter"] < 1:
        _fail("sampler", "cg_max_iter", "must be at least 1")
    kw["cg_precondition"] = r.boolean("sampler", "cg_precondition", False)
    kw["init_mean"] = r.floats("sampler", "init_mean", (0.0,))
    kw["init_std"] = r.floats("sampler", "init_std", (1.0,))
    if any(v <= 0.0 for v in kw["init_std"]):
        _fail("sampler", "init_std", "must be positive")
    dim = len(kw["mean"]) if kind == "gaussian" else 1
    for key in ("init_mean", "init_std"):
        if len(kw[key]) not in (1, dim):
            _fail("sampler", key,
                  f"length {len(kw[key])} does not match the target dimension {dim}")

    kw["seed"] = r.number("run", "seed", 0, integer=True)
    if kw["seed"] < 0:
        _fail("run", "seed", "must be nonnegative")
    kw["replicates"] = r.number("run", "replicates", 1, integer=True)
    if kw["replicates"] < 1:
        _fail("run", "replicates", "must be at least 1")
    kw["output"] = r.raw("run", "output", "results.csv")
    if not kw["output"]:
        _fail("run", "output", "must be a nonempty path")
    kw["record_every"] = r.number("run", "record_every", 1, integer=True)
    if kw["record_every"] < 1:
        _fail("run", "record_every", "must be at least 1")
    kw["record_timing"] = r.boolean("run", "record_timing", False)
    return ExperimentConfig(**kw)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_SECTION_OF = {
    "target_kind": ("target", "kind"),
    "mean": ("target", "mean"),
    "variance": ("target", "variance"),
    "weights": ("target", "weights"),
    "means": ("target", "means"),
    "variances": ("target", "variances"),
    "kernel_family": ("kernel", "family"),
    "bandwidth": ("kernel", "bandwidth"),
    "n_particles": ("sampler", "n_particles"),
    "n_iters": ("sampler", "n_iters"),
    "nu": ("sampler", "nu"),
    "step_kind": ("sampler", "step"),
    "step_size": ("sampler", "step_size"),
    "fudge": ("sampler", "fudge"),
    "solver": ("sampler", "solver"),
    "cg_tol": ("sampler", "cg_tol"),
    "cg_max_iter": ("sampler", "cg_max_iter"),
    "cg_precondition": ("sampler", "cg_precondition"),
    "init_mean": ("sampler", "init_mean"),
    "init_std": ("sampler", "init_std"),
    "seed": ("run", "seed"),
    "replicates": ("run", "replicates"),
    "output": ("run", "output"),
    "record_every": ("run", "record_every"),
    "record_timing": ("run", "record_timing"),
}


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize_config(cfg)) == cfg."""
    parser = configparser.ConfigParser(interpolation=None)
    for section in _KNOWN_KEYS:
        parser.add_section(section)
    for f in fields(cfg):
        section, key = _SECTION_OF[f.name]
        parser.set(section, key, _format_value(getattr(cfg, f.name)))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
