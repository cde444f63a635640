"""
Tests for the regret metrics, CSV packaging, experiment workflows and CLI.
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.adversaries.generators import zipf_trace
from src.handlers.cli import cli
from src.models.experiment import ExperimentConfig, TraceSpec
from src.models.families import JobSimplex, SharedCappedSimplex
from src.storage.trace_store import save_trace
from src.utils.csv_packager import format_value, metrics_header
from src.utils.errors import ConvergenceError, DataError
from src.utils.metrics import (
    c_alpha_regret,
    expected_slope,
    hoeffding_radius,
    regime,
    slope_fit,
)
from src.workflows.experiment import lb_curve_rows, offline_table, phase_scan, run_experiment


class TestMetrics:
    """Regret and growth-rate helpers."""

    def test_c_alpha_regret_linear(self):
        assert c_alpha_regret(13.0, [4.0, 9.0], 0.0) == pytest.approx(0.0)

    def test_c_alpha_regret_half(self):
        # sum phi = (2 + 3) / 0.5 = 10 and c_alpha = sqrt(2)
        assert c_alpha_regret(10.0, [4.0, 9.0], 0.5) == pytest.approx((1 - math.sqrt(2)) * 10)

    def test_slope_of_power_law(self):
        points = [(T, 3.0 * T ** 0.5) for T in (64, 128, 256, 512, 1024)]
        assert slope_fit(points) == pytest.approx(0.5)

    def test_slope_of_constant(self):
        assert slope_fit([(T, 2.0) for T in (10, 20, 40, 80)]) == pytest.approx(0.0, abs=1e-12)

    def test_slope_of_sqrt_log(self):
        points = [(2 ** j, math.sqrt(math.log(2 ** j))) for j in range(10, 18)]
        assert 0.0 < slope_fit(points) < 0.08

    def test_slope_needs_positive_points(self):
        with pytest.raises(DataError):
            slope_fit([(10, 1.0), (20, 1.0), (40, 1.0)])
        with pytest.raises(DataError):
            slope_fit([(10, 1.0), (20, 0.0), (40, 1.0), (80, 1.0)])

    def test_hoeffding_radius(self):
        assert hoeffding_radius(100, 2, 0.01) == pytest.approx(math.sqrt(100 * math.log(40_000) / 2))
        with pytest.raises(DataError):
            hoeffding_radius(0, 2)

    def test_phase_regimes(self):
        assert expected_slope(0.25) == pytest.approx(0.25)
        assert expected_slope(0.75) == 0.0
        assert regime(0.25) == "T^(1/2-alpha)"
        assert regime(0.5) == "sqrt(log T)"
        assert regime(0.9) == "O(1)"


class TestCsvPackaging:
    """Value formatting and headers."""

    def test_format_value(self):
        assert format_value(0.1) == "0.1"
        assert format_value(np.float64(0.1)) == "0.1"
        assert format_value(np.int64(3)) == "3"
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(None) == ""
        assert format_value("cache") == "cache"

    def test_metrics_header(self):
        header = metrics_header(2)
        assert header[:4] == ["T", "alpha", "seed", "mode"]
        assert header[10:12] == ["R_1", "R_2"]
        assert len(header) == 14
        assert metrics_header(2, integral=True)[-3:] == ["fairness_realized", "max_realized_gap", "hoeffding_radius"]


class TestWorkflows:
    """Experiment orchestration."""

    def setup_method(self):
        self.family = SharedCappedSimplex(N=5, k=2, m=2)
        self.trace = TraceSpec(kind="zipf_cache", T=40, s=0.8)

    def test_row_order(self):
        config = ExperimentConfig(trace=self.trace, family=self.family, alphas=[0.25, 0.5],
                                  horizons=[20, 40], seeds=[0, 1])
        rows = run_experiment(config)
        assert [(r.seed, r.alpha, r.T) for r in rows] == [
            (s, a, T) for s in (0, 1) for a in (0.25, 0.5) for T in (20, 40)
        ]
        for r in rows:
            assert len(r.R) == 2
            assert r.fairness_realized is None

    def test_csv_is_reproducible(self, tmp_path):
        texts = []
        for name in ("a.csv", "b.csv"):
            config = ExperimentConfig(trace=self.trace, family=self.family, alphas=[0.5], horizons=[20, 40],
                                      mode="integral", seeds=[3], out=str(tmp_path / name))
            run_experiment(config)
            texts.append((tmp_path / name).read_bytes())
        assert texts[0] == texts[1]
        lines = texts[0].decode().splitlines()
        assert len(lines) == 3
        assert lines[0].endswith("fairness_realized,max_realized_gap,hoeffding_radius")

    def test_short_trace_file(self, tmp_path):
        path = tmp_path / "short.trace"
        save_trace(zipf_trace(5, 2, 0.8, 10, seed=0), path)
        config = ExperimentConfig(trace=TraceSpec(kind="file", path=str(path)), family=self.family,
                                  alphas=[0.5], horizons=[20])
        with pytest.raises(DataError):
            run_experiment(config)

    def test_offline_table_chain(self):
        config = ExperimentConfig(trace=TraceSpec(kind="iid_uniform", T=30, delta=0.5), family=JobSimplex(m=3),
                                  alphas=[0.5], horizons=[15, 30])
        rows = offline_table(config)
        assert [r.T for r in rows] == [15, 30]
        for r in rows:
            assert r.fairness_offline >= r.fairness_uniform - 1e-9
            assert r.fairness_uniform >= r.floor - 1e-9

    def test_phase_scan_rows(self):
        config = ExperimentConfig(trace=self.trace, family=self.family, alphas=[0.25, 0.75],
                                  horizons=[10, 20, 30, 40])
        phases, rows = phase_scan(config)
        assert [p.alpha for p in phases] == [0.25, 0.75]
        assert len(rows) == 8
        assert phases[0].expected_slope == pytest.approx(0.25)
        assert phases[1].regime == "O(1)"
        assert all(0.0 < p.final_rate for p in phases)

    def test_lb_curve_default_grid(self):
        rows = lb_curve_rows()
        assert len(rows) == 19
        assert rows[0].alpha == pytest.approx(0.05)
        assert all(r.lb_ratio <= r.c_alpha + 1e-9 for r in rows)


class TestCli:
    """Command-line surface and exit codes."""

    def setup_method(self):
        self.runner = CliRunner()
        self.small = ["--N", "5", "--k", "2", "--m", "2"]

    def test_simulate_prints_metrics(self):
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "10,20", "--gen", "zipf:0.8",
                                          *self.small])
        assert result.exit_code == 0, result.stdout
        lines = result.stdout.splitlines()
        assert lines[0].startswith("T,alpha,seed,mode,")
        assert len(lines) == 3

    def test_simulate_writes_file(self, tmp_path):
        out = tmp_path / "m.csv"
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0,0.5", "--T", "10", "--gen", "uniform",
                                          "--family", "sched", "--m", "3", "--out", str(out)])
        assert result.exit_code == 0
        assert result.stdout == ""
        assert len(out.read_text().splitlines()) == 3

    def test_offline_command(self):
        result = self.runner.invoke(cli, ["offline", "--alpha", "0.5", "--T", "20", "--gen", "uniform:0.5",
                                          "--family", "sched", "--m", "2"])
        assert result.exit_code == 0
        assert result.stdout.startswith("T,alpha,seed,fairness_offline,")

    def test_lb_curve(self):
        result = self.runner.invoke(cli, ["lb-curve"])
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "alpha,lb_ratio,eta_star,c_alpha,gap"
        assert len(lines) == 20

    def test_audit_commands(self):
        result = self.runner.invoke(cli, ["sample-test", "--family", "sched", "--m", "3",
                                          "--draws", "2000", "--trials", "2"])
        assert result.exit_code == 0
        assert len(result.stdout.splitlines()) == 1 + 2 * 3
        result = self.runner.invoke(cli, ["project-test", "--family", "sched", "--m", "3",
                                          "--trials", "5", "--n-feasible", "50"])
        assert result.exit_code == 0
        assert len(result.stdout.splitlines()) == 1 + 5

    def test_trace_source_is_required_once(self, tmp_path):
        assert self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "10"]).exit_code == 1
        path = tmp_path / "t.trace"
        save_trace(zipf_trace(5, 2, 0.8, 10, seed=0), path)
        both = ["simulate", "--alpha", "0.5", "--T", "10", "--gen", "zipf:1", "--trace", str(path), *self.small]
        assert self.runner.invoke(cli, both).exit_code == 1

    def test_bad_generator(self):
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "10", "--gen", "pareto:2"])
        assert result.exit_code == 1

    def test_missing_option_is_usage_error(self):
        assert self.runner.invoke(cli, ["simulate", "--T", "10", "--gen", "zipf:1"]).exit_code == 1

    def test_invalid_family_is_data_error(self):
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "10", "--gen", "zipf:1",
                                          "--N", "5", "--k", "10"])
        assert result.exit_code == 2

    def test_alpha_out_of_range_is_usage_error(self):
        for bad in ("1.0", "-0.1", "0.5,1.2"):
            result = self.runner.invoke(cli, ["simulate", "--alpha", bad, "--T", "10", "--gen", "zipf:1",
                                              *self.small])
            assert result.exit_code == 1, bad
        assert self.runner.invoke(cli, ["lb-curve", "--alpha", "0"]).exit_code == 1
        assert self.runner.invoke(cli, ["simulate", "--alpha", "half", "--T", "10", "--gen", "zipf:1"]).exit_code == 1

    def test_alpha_zero_is_accepted(self):
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0", "--T", "10", "--gen", "zipf:1", *self.small])
        assert result.exit_code == 0

    def test_short_trace_is_data_error(self, tmp_path):
        path = tmp_path / "t.trace"
        save_trace(zipf_trace(5, 2, 0.8, 10, seed=0), path)
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "20", "--trace", str(path),
                                          *self.small])
        assert result.exit_code == 2

    def test_missing_trace_file_is_data_error(self, tmp_path):
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "10",
                                          "--trace", str(tmp_path / "nope.trace"), *self.small])
        assert result.exit_code == 2
        assert not isinstance(result.exception, FileNotFoundError)

    def test_convergence_failure(self, monkeypatch):
        def fail(config):
            raise ConvergenceError("offline solver stalled", 1.0, 5)

        monkeypatch.setattr("src.workflows.experiment.run_experiment", fail)
        result = self.runner.invoke(cli, ["simulate", "--alpha", "0.5", "--T", "10", "--gen", "zipf:1", *self.small])
        assert result.exit_code == 3
