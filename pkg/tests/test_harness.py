import csv

import numpy as np
import pytest

from steinflow import cli, harness
from steinflow.config import parse_config
from steinflow.diagnostics import mse_report
from steinflow.kernels import GaussianKernel, median_heuristic
from steinflow.sampler import AdagradStep, EnsembleState, svgd_step

SMALL = """
[target]
preset = fig1
[sampler]
n_particles = 16
n_iters = 6
nu = 0.5
[run]
seed = 11
replicates = 2
record_every = 2
"""


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


class TestRunExperiment:
    def test_byte_identical_reruns(self, tmp_path):
        cfg = parse_config(SMALL)
        a = harness.run_experiment(cfg, str(tmp_path / "a.csv"))
        b = harness.run_experiment(cfg, str(tmp_path / "b.csv"))
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_schema_and_ordering(self, tmp_path):
        path = harness.run_experiment(parse_config(SMALL), str(tmp_path / "r.csv"))
        raw = open(path, "rb").read()
        assert b"\r" not in raw
        rows = read_rows(path)
        assert list(rows[0].keys()) == list(harness.RESULT_HEADER)
        # replicates 0 and 1, iterations 0,2,4,6 each
        keys = [(int(r["replicate"]), int(r["iteration"])) for r in rows]
        assert keys == sorted(keys)
        assert keys[0] == (0, 0)
        assert len(rows) == 2 * 4
        for row in rows:
            assert float(row["ksd2"]) >= 0.0
            assert float(row["reg_ksd2"]) >= 0.0

    def test_seventeen_digit_serialization(self, tmp_path):
        path = harness.run_experiment(parse_config(SMALL), str(tmp_path / "r.csv"))
        value = read_rows(path)[0]["mse_h1"]
        assert float(value) == float(f"{float(value):.17g}")
        assert len(value.replace("-", "").replace(".", "").split("e")[0]) >= 10

    def test_nu_one_matches_dedicated_svgd(self, tmp_path):
        doc = SMALL.replace("nu = 0.5", "nu = 1.0")
        cfg = parse_config(doc)
        path = harness.run_experiment(cfg, str(tmp_path / "one.csv"))
        rows = [r for r in read_rows(path) if r["replicate"] == "0"]
        # replay replicate 0 with the dedicated SVGD step
        rng = np.random.default_rng(cfg.seed ^ 0)
        omega = float(rng.standard_normal())
        b = float(rng.uniform(0.0, 2.0 * np.pi))
        state = EnsembleState(cfg.build_init().sample(16, 1, rng=rng))
        target = cfg.build_target()
        got = {0: state.positions.copy()}
        for i in range(6):
            kern = GaussianKernel(median_heuristic(state.positions))
            state = svgd_step(state, kern, target, AdagradStep(cfg.step_size))
            got[i + 1] = state.positions.copy()
        for row in rows:
            it = int(row["iteration"])
            report = mse_report([got[it]], target, [(omega, b)])
            assert float(row["mse_h1"]) == report.mse["h1"]
            assert float(row["mse_h2"]) == report.mse["h2"]
            assert float(row["mse_h3"]) == report.mse["h3"]

    def test_solver_failure_sentinel_and_abort(self, tmp_path):
        doc = """
[target]
preset = fig1
[sampler]
n_particles = 24
n_iters = 6
nu = 0.5
solver = cg
cg_tol = 1e-14
cg_max_iter = 1
[run]
seed = 11
"""
        cfg = parse_config(doc)
        with pytest.raises(harness.SolverFailure):
            harness.run_experiment(cfg, str(tmp_path / "fail.csv"))
        rows = read_rows(str(tmp_path / "fail.csv"))
        assert any(row["ksd2"] == "nan" for row in rows)

    def test_worker_cap_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STEINFLOW_THREADS", "1")
        cfg = parse_config(SMALL)
        a = harness.run_experiment(cfg, str(tmp_path / "serial.csv"))
        monkeypatch.setenv("STEINFLOW_THREADS", "4")
        b = harness.run_experiment(cfg, str(tmp_path / "pool.csv"))
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_record_timing_opt_in(self, tmp_path):
        cfg = parse_config(SMALL + "record_timing = true\n")
        path = harness.run_experiment(cfg, str(tmp_path / "timed.csv"))
        rows = read_rows(path)
        stepped = [r for r in rows if int(r["iteration"]) > 0]
        assert any(float(r["wall_ms"]) > 0.0 for r in stepped)


class TestDiagnose:
    def test_columns(self, tmp_path):
        path = harness.diagnose(parse_config(SMALL), str(tmp_path / "d.csv"))
        rows = read_rows(path)
        assert list(rows[0].keys()) == list(harness.DIAGNOSE_HEADER)
        assert len(rows) == 2 * 4


class TestSweep:
    def test_blocks(self, tmp_path):
        cfg = parse_config(SMALL.replace("replicates = 2", "replicates = 1"))
        path = harness.sweep(cfg, [0.5, 1.0], [8, 16], str(tmp_path / "s.csv"))
        rows = read_rows(path)
        assert list(rows[0].keys())[:2] == ["nu", "n_particles"]
        combos = {(r["nu"], r["n_particles"]) for r in rows}
        assert len(combos) == 4


class TestBench:
    def test_single_count(self, tmp_path):
        cfg = parse_config(SMALL.replace("nu = 0.5", "nu = 0.2"))
        path = harness.bench_timing(cfg, [30], str(tmp_path / "b.csv"))
        rows = read_rows(path)
        assert len(rows) == 1
        assert list(rows[0].keys()) == list(harness.BENCH_HEADER)
        assert float(rows[0]["regularized_ms"]) > 0.0
        assert float(rows[0]["svgd_ms"]) > 0.0

    def test_requires_regularized_nu(self, tmp_path):
        cfg = parse_config(SMALL.replace("nu = 0.5", "nu = 1.0"))
        with pytest.raises(Exception, match="sampler.nu"):
            harness.bench_timing(cfg, [20], str(tmp_path / "b.csv"))

    def test_counts_must_ascend(self, tmp_path):
        cfg = parse_config(SMALL)
        with pytest.raises(ValueError, match="ascending"):
            harness.bench_timing(cfg, [50, 20], str(tmp_path / "b.csv"))


ORACLE_DOC = """
[target]
kind = gaussian
mean = 0
variance = 1
[kernel]
family = linear
[sampler]
n_particles = 4000
n_iters = 12
step = constant
init_mean = 0
init_std = 2
solver = cg
cg_tol = 1e-12
cg_max_iter = 50
[run]
seed = 5
"""


class TestGaussianOracle:
    def test_tracking_and_bound(self, tmp_path):
        cfg = parse_config(ORACLE_DOC)
        path = harness.gaussian_oracle(cfg, 0.05, str(tmp_path / "g.csv"))
        rows = read_rows(path)
        assert list(rows[0].keys()) == list(harness.ORACLE_HEADER)
        assert len(rows) == 13
        errs = [float(r["rel_frob_err"]) for r in rows]
        assert errs[0] <= 3.0 * np.sqrt(2.0 / 4000.0)  # pure sampling error at step 0
        assert max(errs) <= 0.1
        kls = [float(r["kl_closed"]) for r in rows]
        assert all(a >= b - 1e-15 for a, b in zip(kls, kls[1:]))
        bounds = [float(r["bound_rhs"]) for r in rows]
        assert all(k <= b + 1e-9 for k, b in zip(kls, bounds))

    def test_requires_linear_kernel(self, tmp_path):
        cfg = parse_config(ORACLE_DOC.replace("family = linear", "family = gaussian"))
        with pytest.raises(Exception, match="kernel.family"):
            harness.gaussian_oracle(cfg, 0.05, str(tmp_path / "g.csv"))

    def test_requires_zero_mean(self, tmp_path):
        cfg = parse_config(ORACLE_DOC.replace("mean = 0", "mean = 1"))
        with pytest.raises(Exception, match="target.mean"):
            harness.gaussian_oracle(cfg, 0.05, str(tmp_path / "g.csv"))


class TestCLI:
    def test_run_success(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(SMALL)
        out = tmp_path / "out.csv"
        code = cli.main(["run", str(cfg_path), "--output", str(out)])
        assert code == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_missing_config_file(self, capsys):
        assert cli.main(["run", "/nonexistent/cfg.ini"]) == 1
        assert "error" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.ini"
        cfg_path.write_text(MINIMAL_BAD)
        assert cli.main(["run", str(cfg_path)]) == 1
        assert "sampler.nu" in capsys.readouterr().err

    def test_diagnose_subcommand(self, tmp_path):
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(SMALL)
        out = tmp_path / "diag.csv"
        assert cli.main(["diagnose", str(cfg_path), "--output", str(out)]) == 0
        assert out.exists()

    def test_sweep_subcommand(self, tmp_path):
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(SMALL.replace("replicates = 2", "replicates = 1"))
        out = tmp_path / "sweep.csv"
        code = cli.main(["sweep", str(cfg_path), "--nu", "0.5,1.0",
                         "--particles", "8", "--output", str(out)])
        assert code == 0
        assert out.exists()

    def test_bench_subcommand(self, tmp_path):
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(SMALL.replace("nu = 0.5", "nu = 0.2"))
        out = tmp_path / "bench.csv"
        assert cli.main(["bench", str(cfg_path), "--counts", "10,20",
                         "--output", str(out)]) == 0
        assert len(read_rows(str(out))) == 2

    def test_gaussian_oracle_subcommand(self, tmp_path):
        cfg_path = tmp_path / "cfg.ini"
        cfg_path.write_text(ORACLE_DOC.replace("n_particles = 4000",
                                               "n_particles = 500"))
        out = tmp_path / "oracle.csv"
        assert cli.main(["gaussian-oracle", str(cfg_path), "--delta", "0.05",
                         "--output", str(out)]) == 0
        assert len(read_rows(str(out))) == 13


MINIMAL_BAD = """
[target]
kind = mixture1d
[sampler]
nu = 2.0
"""
