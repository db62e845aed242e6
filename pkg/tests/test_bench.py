"""Tests for the sweep configuration, Monte Carlo harness, CSV I/O, and CLI."""

import math

import numpy as np
import pytest

from doamap.bench import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    RunRecord,
    aggregate,
    emit_curves,
    read_results,
    run_single,
    run_sweep,
    validate_distributions,
    write_results,
)
from doamap.cli import main as cli_main

FAST = dict(d=16, k_true=2, m=64, n=64, k_max=5, n_runs=2,
            snr_grid_db=(20.0,), grid_step_deg=2.0)


class TestConfig:
    def test_desk_defaults(self):
        cfg = ExperimentConfig()
        assert (cfg.d, cfg.k_true, cfg.m, cfg.n) == (32, 3, 512, 512)
        assert cfg.k_max == 10 and cfg.n_runs == 100
        assert cfg.grid_step_deg == 0.5
        assert len(cfg.snr_grid_db) == 13

    def test_paper_scale(self):
        cfg = ExperimentConfig.paper_scale()
        assert (cfg.d, cfg.k_true, cfg.m, cfg.n) == (100, 5, 4096, 4096)
        assert cfg.n_runs == 1000 and cfg.grid_step_deg == 0.1

    def test_resolved_doas_default(self):
        assert ExperimentConfig().resolved_doas() == (10.0, 66.0, 122.0)

    def test_resolved_doas_spacing_override(self):
        cfg = ExperimentConfig(doa_spacing_deg=5.0)
        assert cfg.resolved_doas() == (10.0, 15.0, 20.0)

    def test_resolved_doas_explicit(self):
        cfg = ExperimentConfig(k_true=2, doa_deg=(33.0, 99.0))
        assert cfg.resolved_doas() == (33.0, 99.0)

    def test_grid_points_order(self):
        cfg = ExperimentConfig(snr_grid_db=(0.0, 10.0), overlap=(0.0, 0.5))
        assert cfg.grid_points() == [
            (0.0, 0.0, 0.0), (0.0, 0.5, 0.0), (10.0, 0.0, 0.0), (10.0, 0.5, 0.0)
        ]

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(k_max=32)
        with pytest.raises(ConfigError):
            ExperimentConfig(n_runs=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(m=600, n=512)
        with pytest.raises(ConfigError):
            ExperimentConfig(methods=("music-map", "esprit"))
        with pytest.raises(ConfigError):
            ExperimentConfig(doa_deg=(10.0,))

    def test_from_file(self, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text(
            "# comment line\n"
            "d = 16\n"
            "k_true = 2\n"
            "m = 64\n"
            "n = 64\n"
            "k_max = 5\n"
            "snr_grid_db = -10, 0, 10\n"
            "methods = music-map, dtft-map\n"
            "n_runs = 3\n"
        )
        cfg = ExperimentConfig.from_file(cfg_file)
        assert cfg.d == 16 and cfg.snr_grid_db == (-10.0, 0.0, 10.0)
        assert cfg.methods == ("music-map", "dtft-map")

    def test_from_file_unknown_key(self, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text("dd = 16\n")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(cfg_file)

    def test_from_file_bad_syntax(self, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text("just some text\n")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(cfg_file)

    def test_from_file_missing(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file("/nonexistent/path.cfg")


class TestRunSingle:
    def test_row_per_method(self):
        from doamap.arraysim import default_scenario

        sc = default_scenario(d=16, k=2, m=64, n=64, snr_db=20.0, seed=0)
        rows = run_single(sc, k_max=5, grid_step_deg=2.0,
                          methods=("pca-map", "music-map", "dtft-map",
                                   "music-aic", "music-known-k", "dtft-known-k"),
                          rng=np.random.default_rng(0))
        assert [r["method"] for r in rows] == [
            "pca-map", "music-map", "dtft-map", "music-aic",
            "music-known-k", "dtft-known-k",
        ]
        for row in rows:
            assert row["wall_ms"] > 0.0
            assert 0 <= row["k_hat"] <= 5
            assert row["rmse_sigma"] >= 0.0
            if row["method"] == "pca-map":
                assert math.isnan(row["err_doa"])
            else:
                assert 0.0 <= row["err_doa"] <= 1.0

    def test_known_k_uses_truth(self):
        from doamap.arraysim import default_scenario

        sc = default_scenario(d=16, k=2, m=64, n=64, snr_db=20.0, seed=1)
        rows = run_single(sc, 5, 2.0, ("music-known-k", "dtft-known-k"),
                          rng=np.random.default_rng(1))
        assert all(r["k_hat"] == 2 for r in rows)


class TestSweep:
    def test_record_count_and_order(self):
        cfg = ExperimentConfig(**FAST, methods=("music-map", "dtft-map"))
        records = run_sweep(cfg)
        assert len(records) == 2 * 2  # runs x methods, one grid point
        assert [(r.run, r.method) for r in records] == [
            (0, "music-map"), (0, "dtft-map"), (1, "music-map"), (1, "dtft-map")
        ]

    def test_deterministic_across_workers(self, tmp_path):
        cfg = ExperimentConfig(**FAST, methods=("music-map",))
        serial = run_sweep(cfg, jobs=1)
        parallel = run_sweep(cfg, jobs=2)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_results(serial, p1)
        write_results(parallel, p2)
        # identical except the wall-clock column
        strip = lambda text: [",".join(line.split(",")[:-1])
                              for line in text.splitlines()]
        assert strip(p1.read_text()) == strip(p2.read_text())

    def test_seed_changes_data(self):
        cfg = ExperimentConfig(**FAST, methods=("music-map",))
        base = run_sweep(cfg)
        other = run_sweep(ExperimentConfig(**FAST, methods=("music-map",),
                                           master_seed=99))
        assert any(a.rmse_a0 != b.rmse_a0 for a, b in zip(base, other))

    def test_csv_round_trip(self, tmp_path):
        cfg = ExperimentConfig(**FAST)
        records = run_sweep(cfg)
        path = tmp_path / "out.csv"
        write_results(records, path)
        text = path.read_text().splitlines()
        assert text[0].startswith("#")
        assert text[1] == CSV_HEADER
        back = read_results(path)
        assert len(back) == len(records)
        for a, b in zip(records, back):
            assert a.method == b.method and a.k_hat == b.k_hat
            assert b.rmse_a0 == pytest.approx(a.rmse_a0, rel=1e-9, nan_ok=True)


class TestAggregation:
    def _records(self):
        rows = []
        for snr in (0.0, 10.0):
            for run, k in enumerate((2, 3)):
                rows.append(RunRecord(
                    method="music-map", snr_db=snr, overlap=0.0, decay=0.0,
                    run=run, k_hat=k, err_doa=0.1 * (run + 1), rmse_a0=1.0,
                    rmse_a_shrunk=0.5, rmse_sigma=0.2, tau_mean=0.3,
                    wall_ms=1.0,
                ))
        return rows

    def test_aggregate_means(self):
        agg = aggregate(self._records())
        assert len(agg) == 2
        (key, n, means) = agg[0]
        assert key == ("music-map", 0.0, 0.0, 0.0) and n == 2
        assert means["err_doa"] == pytest.approx(0.15)
        assert means["k_hat_mean"] == pytest.approx(2.5)

    def test_aggregate_skips_nan(self):
        rows = self._records()
        rows[0] = RunRecord(**{**rows[0].__dict__, "err_doa": math.nan})
        agg = aggregate(rows)
        assert agg[0][2]["err_doa"] == pytest.approx(0.2)

    def test_emit_curves(self, tmp_path):
        paths = emit_curves(self._records(), "err_doa", tmp_path / "curves")
        assert len(paths) == 1
        lines = paths[0].read_text().splitlines()
        assert lines[0] == "snr_db,mean_err_doa"
        assert lines[1] == "0,0.15"
        assert lines[2] == "10,0.15"

    def test_emit_curves_rejects_unknown_quantity(self, tmp_path):
        with pytest.raises(ValueError):
            emit_curves(self._records(), "nonsense", tmp_path)

    def test_emit_curves_rejects_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_curves([], "err_doa", tmp_path)


class TestValidateDistributions:
    def test_suite_passes(self):
        passed, checks = validate_distributions(n_mc=5000)
        assert passed, checks
        names = [c[0] for c in checks]
        assert "complement_identity" in names
        assert "dominance_sum_cross_form" in names
        assert all(len(c) == 4 for c in checks)

    def test_perturbation_fails(self):
        passed, checks = validate_distributions(perturb=1e-6, n_mc=2000)
        assert not passed
        failed = {name for name, *_rest, ok in checks if not ok}
        assert "complement_identity" in failed


class TestCli:
    def test_sweep_writes_outputs(self, tmp_path, capsys):
        cfg_file = tmp_path / "fast.cfg"
        cfg_file.write_text(
            "d = 16\nk_true = 2\nm = 64\nn = 64\nk_max = 5\n"
            "snr_grid_db = 20\nn_runs = 2\ngrid_step_deg = 2.0\n"
            "methods = music-map\n"
            f"output_path = {tmp_path / 'res.csv'}\n"
        )
        assert cli_main(["sweep", "--config", str(cfg_file)]) == 0
        assert (tmp_path / "res.csv").exists()
        assert (tmp_path / "res_agg.csv").exists()

    def test_sweep_bad_config_exit_code(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("garbage\n")
        assert cli_main(["sweep", "--config", str(cfg_file)]) == 1

    def test_sweep_missing_config_exit_code(self, capsys):
        assert cli_main(["sweep", "--config", "/no/such/file.cfg"]) == 1

    def test_validate_dist_exit_code(self, capsys):
        assert cli_main(["validate-dist"]) == 0
        out = capsys.readouterr().out
        assert "complement_identity" in out

    def test_curves_round_trip(self, tmp_path, capsys):
        res = tmp_path / "res.csv"
        write_results([RunRecord(
            method="music-map", snr_db=0.0, overlap=0.0, decay=0.0, run=0,
            k_hat=2, err_doa=0.1, rmse_a0=1.0, rmse_a_shrunk=0.5,
            rmse_sigma=0.2, tau_mean=0.3, wall_ms=1.0,
        )], res)
        out_dir = tmp_path / "curves"
        assert cli_main(["curves", "--in", str(res), "--quantity", "err_doa",
                         "--out-dir", str(out_dir)]) == 0
        assert list(out_dir.glob("curve_err_doa_*.csv"))

    def test_curves_missing_input_exit_code(self, capsys):
        assert cli_main(["curves", "--in", "/no/such.csv",
                         "--quantity", "err_doa"]) == 1

    def test_curves_bad_quantity_exit_code(self, tmp_path, capsys):
        res = tmp_path / "res.csv"
        res.write_text(CSV_HEADER + "\n")
        assert cli_main(["curves", "--in", str(res),
                         "--quantity", "nonsense"]) == 1
