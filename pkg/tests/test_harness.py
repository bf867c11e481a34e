"""Experiment harness: configs, goodness of fit, runners, reports, CLI."""

import json
import math
import os

import numpy as np
import pytest
from scipy.special import ndtr

from shevar.cli import main as cli_main
from shevar.harness import (
    Config,
    ConfigError,
    ExperimentReport,
    default_config,
    ks_pvalue,
    ks_statistic,
    load_config,
    parse_config,
    run_experiment,
    verify_report,
)


class TestConfig:
    def test_defaults_valid(self):
        for kind in ("identities", "lln", "clt", "estimate", "scaling", "simulate"):
            cfg = default_config(kind)
            assert cfg.kind == kind
            assert cfg["seed"] == 20240617

    def test_round_trip_lossless(self):
        cfg = default_config("clt").replace(**{
            "model.alpha": 0.75, "design.points": [0.0, 0.25],
            "clt.normalization": "continuum"})
        again = parse_config(cfg.text())
        assert again.data == cfg.data
        assert again.hash() == cfg.hash()

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("experiment = clt\nmodel.alpa = 0.5\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("experiment = clt\nreplicates = 3.7\n")

    def test_comments_and_lists(self):
        cfg = parse_config(
            "experiment = lln  # kind\n"
            "lln.ladder = 8, 9, 10\n"
            "functional.powers = 2.0, 4.0\n",
            base=default_config("lln"))
        assert [int(v) for v in cfg["lln.ladder"]] == [8, 9, 10]

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_config("experiment clt\n")

    def test_file_loading(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("experiment = clt\nreplicates = 12\n")
        cfg = load_config(p, base=default_config("clt"))
        assert cfg["replicates"] == 12

    def test_wrong_experiment_in_file(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("experiment = lln\n")
        with pytest.raises(ConfigError):
            load_config(p, base=default_config("clt"))


class TestKolmogorovSmirnov:
    """Statistic validated against brute force over the empirical CDF."""

    @staticmethod
    def brute_force(sample):
        x = np.sort(np.asarray(sample, float))
        n = len(x)
        best = 0.0
        for i, xi in enumerate(x):
            f = ndtr(xi)
            best = max(best, abs((i + 1) / n - f), abs(i / n - f))
        return best

    def test_hand_checked_single_zero(self):
        assert ks_statistic([0.0]) == pytest.approx(0.5, abs=1e-15)

    def test_hand_checked_pair(self):
        # F(-0.5) = 0.30854, F(0.5) = 0.69146: D = 0.30854 at the edges
        assert ks_statistic([-0.5, 0.5]) == pytest.approx(0.3085375387259869,
                                                          abs=1e-12)

    def test_hand_checked_triple(self):
        assert ks_statistic([-1.0, 0.0, 1.0]) == pytest.approx(
            self.brute_force([-1.0, 0.0, 1.0]), abs=1e-15)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_matches_brute_force_random(self, seed):
        x = np.random.default_rng(seed).standard_normal(50)
        assert ks_statistic(x) == pytest.approx(self.brute_force(x), abs=1e-14)

    def test_pvalue_limits(self):
        assert ks_pvalue(1e-9, 100) == pytest.approx(1.0)
        assert ks_pvalue(0.9, 100) < 1e-10

    def test_normal_sample_not_rejected(self):
        x = np.random.default_rng(11).standard_normal(500)
        d = ks_statistic(x)
        assert ks_pvalue(d, 500) > 0.01

    def test_shifted_sample_rejected(self):
        x = np.random.default_rng(12).standard_normal(500) + 1.0
        assert ks_pvalue(ks_statistic(x), 500) < 1e-6


class TestRunners:
    def test_identities_small(self):
        cfg = default_config("identities").replace(**{
            "identities.alphas": [0.25, 0.75],
            "identities.partial_sum_r": 10 ** 5,
            "identities.pi_r_max": 8,
            "identities.rho_r_max": 3,
            "identities.mc_pairs": 40_000,
        })
        rep = run_experiment(cfg)
        assert rep.passed
        assert rep.summary["max_pi_mass_error"] <= 1e-6

    def test_lln_smoke(self):
        cfg = default_config("lln").replace(**{
            "lln.ladder": [9, 10, 11, 12], "replicates": 200})
        rep = run_experiment(cfg)
        assert rep.passed
        for slope in rep.summary["slopes"].values():
            assert abs(slope + 0.5) <= 0.1

    def test_clt_exact_smoke(self):
        cfg = default_config("clt").replace(**{
            "design.n": 2048, "replicates": 300})
        rep = run_experiment(cfg)
        assert rep.passed
        assert rep.summary["ks_pvalue"] > 0.01

    def test_clt_rejects_alpha_one(self):
        cfg = default_config("clt").replace(**{"model.alpha": 1.0})
        with pytest.raises(ValueError, match="alpha in \\(0, 1\\)"):
            run_experiment(cfg)

    def test_clt_spde_smoke(self):
        cfg = default_config("clt").replace(**{
            "driver": "spde", "model.sigma.kind": "linear",
            "model.sigma.sigma0": 0.5, "design.n": 256,
            "design.horizon": 0.01, "design.spatial_modes": 512,
            "design.oversampling": 4, "design.burn_in": 32,
            "replicates": 80})
        rep = run_experiment(cfg)
        assert rep.summary["ks_pvalue"] > 0.001
        assert abs(rep.summary["mean_studentized"]) < 0.5

    def test_estimate_coverage_smoke(self):
        cfg = default_config("estimate").replace(**{
            "estimate.estimator": "coverage", "design.n": 4096,
            "replicates": 120})
        rep = run_experiment(cfg)
        assert rep.passed
        assert 0.85 <= rep.summary["coverage"] <= 1.0

    def test_estimate_alpha_smoke(self):
        cfg = default_config("estimate").replace(**{
            "estimate.estimator": "alpha", "design.n": 2 ** 13,
            "replicates": 40})
        rep = run_experiment(cfg)
        assert rep.passed

    def test_estimate_degenerate_completes(self):
        # linear coefficient with u0 = 0 pins the path at zero, so every
        # replicate's denominator vanishes; the run must still complete
        cfg = default_config("estimate").replace(**{
            "estimate.estimator": "sigma0", "driver": "spde",
            "model.sigma.kind": "linear", "model.sigma.sigma0": 0.5,
            "model.u0.value": 0.0, "design.n": 64, "design.horizon": 0.01,
            "design.spatial_modes": 256, "design.oversampling": 1,
            "design.burn_in": 0, "replicates": 5})
        rep = run_experiment(cfg)
        assert not rep.passed
        assert rep.summary["n_degenerate"] == 5
        assert all(row["error"] for row in rep.rows)

    def test_scaling_smoke(self):
        cfg = default_config("scaling").replace(**{
            "replicates": 8, "design.n": 2 ** 13})
        rep = run_experiment(cfg)
        assert rep.passed

    def test_simulate_writes_paths(self, tmp_path):
        cfg = default_config("simulate").replace(**{"replicates": 2})
        rep = run_experiment(cfg, out_dir=str(tmp_path))
        assert rep.passed
        assert (tmp_path / "paths" / "path_0000.csv").exists()
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "replicates.csv").exists()


class TestReports:
    def small_cfg(self):
        return default_config("clt").replace(**{
            "design.n": 512, "replicates": 40})

    def test_summary_recomputable_and_verify(self, tmp_path):
        rep = run_experiment(self.small_cfg(), out_dir=str(tmp_path))
        assert verify_report(tmp_path / "report.json")

    def test_tampered_report_detected(self, tmp_path):
        run_experiment(self.small_cfg(), out_dir=str(tmp_path))
        path = tmp_path / "report.json"
        payload = json.loads(path.read_text())
        payload["summary"]["ks_pvalue"] = 0.123456
        path.write_text(json.dumps(payload))
        assert not verify_report(path)

    def test_report_embeds_config_hash(self, tmp_path):
        cfg = self.small_cfg()
        rep = run_experiment(cfg, out_dir=str(tmp_path))
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["config_hash"] == cfg.hash()
        assert payload["provenance"]["config_hash"] == cfg.hash()

    def test_reproducible_across_runs_and_threads(self, tmp_path):
        cfg = self.small_cfg()
        a = run_experiment(cfg, workers=1, out_dir=str(tmp_path / "a"))
        b = run_experiment(cfg, workers=2, out_dir=str(tmp_path / "b"))
        assert a.rows == b.rows
        csv_a = (tmp_path / "a" / "replicates.csv").read_bytes()
        csv_b = (tmp_path / "b" / "replicates.csv").read_bytes()
        assert csv_a == csv_b

    def test_read_round_trip(self, tmp_path):
        rep = run_experiment(self.small_cfg(), out_dir=str(tmp_path))
        again = ExperimentReport.read(tmp_path / "report.json")
        assert again.rows == rep.rows
        assert again.summary == rep.summary
        assert again.passed == rep.passed


class TestCli:
    def test_pass_run(self, tmp_path, capsys):
        code = cli_main(["clt", "--seed", "4242", "--replicates", "300",
                         "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "result: PASS" in out
        assert (tmp_path / "report.json").exists()

    def test_config_file(self, tmp_path, capsys):
        p = tmp_path / "c.cfg"
        p.write_text("design.n = 512\nreplicates = 60\n")
        code = cli_main(["clt", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code in (0, 1)  # tolerances may fail at this tiny scale
        assert (tmp_path / "o" / "replicates.csv").exists()

    def test_bad_config_exit_code(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("no_such_key = 1\n")
        assert cli_main(["clt", "--config", str(p)]) == 2

    def test_verify_flow(self, tmp_path, capsys):
        cli_main(["clt", "--seed", "99", "--replicates", "40",
                  "--out", str(tmp_path)])
        code = cli_main(["clt", "--verify-report",
                         str(tmp_path / "report.json")])
        assert code == 0
        assert "MATCH" in capsys.readouterr().out
