import json

import numpy as np
import pytest

from seasonchain import analytic
from seasonchain.cli import main, read_config_file
from seasonchain.distributions import preset


def run_cli(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=1"
    header = lines[1].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]]) \
        if len(lines) > 2 else np.empty((0, len(header)))
    return header, data


class TestDraw:
    def test_basic(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("draw", "--case", "case1", "--n", 200, "--seed", 5,
                       "--out", out) == 0
        header, data = read_csv(out / "draws.csv")
        assert header == ["delta", "tau"]
        assert data.shape == (200, 2)
        assert np.all((data[:, 0] > 0) & (data[:, 0] < 1)) and np.all(data[:, 1] > 0)
        manifest = json.loads((out / "draw_manifest.json").read_text())
        assert manifest["settings"]["seed"] == 5
        assert "draws.csv" in manifest["outputs"]

    def test_empty(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("draw", "--n", 0, "--out", out) == 0
        _, data = read_csv(out / "draws.csv")
        assert data.shape[0] == 0

    def test_summary_correlation_sign(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("draw", "--case", "case3", "--n", 20000, "--out", out) == 0
        summary = json.loads((out / "draws_summary.json").read_text())
        assert summary["corr"] < -0.3

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("draw", "--n", 50, "--seed", 9, "--out", a)
        run_cli("draw", "--n", 50, "--seed", 9, "--out", b)
        assert (a / "draws.csv").read_bytes() == (b / "draws.csv").read_bytes()


class TestBivariate:
    def test_grid_and_overlay(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("bivariate", "--case", "case1", "--p", 0.1, 0.5,
                       "--grid2d", 40, "--overlay", 200, "--seed", 3,
                       "--out", out) == 0
        support = {}
        for p in (0.1, 0.5):
            tag = str(p).replace(".", "_")
            _, grid = read_csv(out / f"bivariate_p{tag}.csv")
            assert np.all(grid[:, 2] >= 0.0)
            support[p] = int(np.sum(grid[:, 2] > 0))
            _, overlay = read_csv(out / f"overlay_p{tag}.csv")
            assert overlay.shape == (200, 2)
            for re, z in overlay:
                if z > 0:
                    assert analytic.in_reachable_region(p, z, re)
        assert support[0.5] > support[0.1]  # wider support for the larger prior

    def test_rejects_r_not_2(self, tmp_path, capsys):
        assert run_cli("bivariate", "--r", 3, "--out", tmp_path / "o") == 1
        assert "r=2" in capsys.readouterr().err


class TestTransition:
    def test_density_and_atom(self, tmp_path, capsys):
        out = tmp_path / "o"
        assert run_cli("transition", "--case", "case1", "--p", 0.3,
                       "--grid", 256, "--re", 1.6, "--out", out) == 0
        stdout = capsys.readouterr().out
        assert "atom+integral=1.000" in stdout.replace("0.9999", "1.000").replace("1.0000", "1.000")
        summary = json.loads((out / "transition_p0_3_summary.json").read_text())
        assert summary["normalization"] == pytest.approx(1.0, abs=2e-3)
        assert summary["conditional"]["integral"] == pytest.approx(1.0, abs=2e-3)
        _, cond = read_csv(out / "conditional_p0_3_re1_6.csv")
        assert np.all(cond[:, 1] >= 0.0)

    def test_subcritical_re_forecasts_extinction(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("transition", "--p", 0.3, "--grid", 128, "--re", 0.8,
                       "--out", out) == 0
        summary = json.loads((out / "transition_p0_3_summary.json").read_text())
        assert summary["conditional"]["atom_at_zero"] == 1.0


class TestStationaryCmd:
    def test_r2_outputs(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("stationary", "--case", "case1", "--seasons", 4000,
                       "--grid", 128, "--re-list", 1.6, "--seed", 8,
                       "--out", out) == 0
        summary = json.loads((out / "stationary_summary.json").read_text())
        assert abs(summary["analytic_atom"] - summary["simulated_atom"]) < 0.03
        assert summary["analytic_total_mass"] == pytest.approx(1.0, abs=5e-3)
        assert (out / "analytic_stationary.csv").exists()
        assert (out / "simulated_kde.csv").exists()
        assert (out / "conditional_re1_6.csv").exists()

    def test_r10_simulation_only(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("stationary", "--case", "case1", "--r", 10,
                       "--seasons", 3000, "--grid", 128, "--re-list", 1.6,
                       "--seed", 8, "--out", out) == 0
        assert not (out / "analytic_stationary.csv").exists()
        summary = json.loads((out / "stationary_summary.json").read_text())
        assert "analytic_atom" not in summary


class TestScatter:
    def test_outputs_and_support(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("scatter", "--case", "case1", "--seasons", 3000,
                       "--seed", 4, "--out", out) == 0
        report = json.loads((out / "support_report.json").read_text())
        assert report["n_violations"] == 0
        _, curve = read_csv(out / "curve.csv")
        want = -np.log1p(-curve[:, 0]) / curve[:, 0]
        np.testing.assert_allclose(curve[:, 1], want, atol=1e-12)


class TestForecast:
    def test_point_forecast_no_immunity(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("forecast", "--p", 0, "--re", 2.0, "--out", out) == 0
        summary = json.loads((out / "forecast_summary.json").read_text())
        assert summary["point_forecast"] == pytest.approx(0.79681213002002, abs=1e-9)

    def test_subcritical(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("forecast", "--p", 0.4, "--re", 0.8, "--out", out) == 0
        summary = json.loads((out / "forecast_summary.json").read_text())
        assert summary["mean"] == 0.0 and summary["point_forecast"] == 0.0

    def test_quantiles_bracket_simulation(self, tmp_path, samples):
        from seasonchain.simulate import conditional_window
        out = tmp_path / "o"
        assert run_cli("forecast", "--case", "case1", "--p", 0.5, "--re", 1.6,
                       "--out", out) == 0
        summary = json.loads((out / "forecast_summary.json").read_text())
        win = conditional_window(samples("case1", 2), 1.6, 0.02)
        near_half = win.z[np.abs(win.p[:, 0] - 0.5) < 0.05]
        frac_in = np.mean((near_half >= summary["quantiles"]["5%"])
                          & (near_half <= summary["quantiles"]["95%"]))
        assert frac_in > 0.7


class TestConfigPlumbing:
    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("case=case2\nseed=100\n# a comment\n\nseasons=50\n")
        values = read_config_file(cfg)
        assert values == {"case": "case2", "seed": 100, "seasons": 50}
        out = tmp_path / "o"
        assert run_cli("draw", "--config", cfg, "--seed", 7, "--n", 10,
                       "--out", out) == 0
        manifest = json.loads((out / "draw_manifest.json").read_text())
        assert manifest["settings"]["case"] == "case2"  # from file
        assert manifest["settings"]["seed"] == 7        # flag wins

    def test_bad_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nope=1\n")
        assert run_cli("draw", "--config", cfg, "--out", tmp_path / "o") == 1
        assert "unknown key" in capsys.readouterr().err

    def test_env_var_outdir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SEASONCHAIN_OUTDIR", str(tmp_path / "envout"))
        monkeypatch.chdir(tmp_path)
        assert run_cli("draw", "--n", 5) == 0
        assert (tmp_path / "envout" / "draws.csv").exists()

    def test_custom_distribution_flags(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("draw", "--a", 2, "--b", 2, "--mu0", 0.5, "--n", 100,
                       "--out", out) == 0
        manifest = json.loads((out / "draw_manifest.json").read_text())
        assert manifest["settings"]["a"] == 2.0

    def test_incomplete_custom_distribution(self, tmp_path, capsys):
        assert run_cli("draw", "--a", 2, "--out", tmp_path / "o") == 1
        assert "needs a, b, mu0" in capsys.readouterr().err

    def test_gnuplot_script(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("draw", "--n", 10, "--gnuplot", "--out", out) == 0
        assert "draws.csv" in (out / "draw.gp").read_text()


class TestJsonFormat:
    def test_draw_json(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("draw", "--n", 25, "--format", "json", "--out", out) == 0
        payload = json.loads((out / "draws.json").read_text())
        assert payload["columns"] == ["delta", "tau"]
        assert len(payload["rows"]) == 25
        assert not (out / "draws.csv").exists()

    def test_simulate_json(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("simulate", "--seasons", 40, "--burn-in", 5,
                       "--format", "json", "--out", out) == 0
        payload = json.loads((out / "chain.json").read_text())
        assert payload["columns"][:3] == ["season", "delta", "tau"]
        assert len(payload["rows"]) == 45

    def test_gnuplot_needs_csv(self, tmp_path, capsys):
        assert run_cli("draw", "--n", 5, "--format", "json", "--gnuplot",
                       "--out", tmp_path / "o") == 1
        assert "--format csv" in capsys.readouterr().err


class TestSimulateCmd:
    def test_chain_export(self, tmp_path):
        out = tmp_path / "o"
        assert run_cli("simulate", "--case", "case3", "--seasons", 300,
                       "--burn-in", 50, "--seed", 6, "--out", out) == 0
        header, data = read_csv(out / "chain.csv")
        assert header[:5] == ["season", "delta", "tau", "r_e", "z_overall"]
        assert data.shape == (350, 7)
        summary = json.loads((out / "chain_summary.json").read_text())
        assert 0.0 <= summary["outbreak_free_fraction"] <= 1.0
