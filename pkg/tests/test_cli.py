import json
import subprocess
import sys

import pytest


def run_cli(args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "qsinf.cli"] + args, capture_output=True, text=True, cwd=cwd
    )


class TestFisher:
    def test_great_circle_point(self):
        out = run_cli(["fisher", "--model", "great-circle", "--theta", "0.3"])
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["I"] == pytest.approx(1.0, abs=1e-9)
        assert payload["i"] == pytest.approx(1.0, abs=1e-9)
        assert payload["attained"] is True


class TestBell:
    def test_table(self, tmp_path):
        art = tmp_path / "bell.csv"
        out = run_cli(["bell", "--out", str(art)])
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["p_equal"] == [1.0, 0.25, 0.25, 0.25]
        assert payload["violated"] is True
        assert art.read_text().startswith("setting,")


class TestDeterminism:
    def test_identical_config_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["traj", "--kind", "jump", "--n-traj", "20", "--t-max", "0.5", "--seed", "5"]
        out1 = run_cli(args + ["--out", str(a)])
        out2 = run_cli(args + ["--out", str(b)])
        assert out1.returncode == out2.returncode == 0
        assert out1.stdout == out2.stdout
        assert a.read_bytes() == b.read_bytes()

    def test_tomo_simulate_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["tomo", "simulate", "--state", "vacuum", "--n", "200", "--seed", "7"]
        run_cli(base + ["--out", str(a)])
        run_cli(base + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().startswith("phi,x\n")


class TestTomoPipeline:
    def test_simulate_then_estimate(self, tmp_path):
        samples = tmp_path / "samples.csv"
        est = tmp_path / "est.json"
        sim = run_cli(
            ["tomo", "simulate", "--state", "vacuum", "--n", "3000", "--seed", "7", "--out", str(samples)]
        )
        assert sim.returncode == 0
        fit = run_cli(
            ["tomo", "estimate", "--method", "mle", "--nmax", "2", "--in", str(samples), "--out", str(est)]
        )
        assert fit.returncode == 0
        payload = json.loads(fit.stdout)
        assert payload["fidelity_vacuum"] >= 0.97
        blob = json.loads(est.read_text())
        assert blob["n_max"] == 2

    def test_missing_input_is_config_error(self):
        out = run_cli(["tomo", "estimate", "--method", "mle", "--in", "/nonexistent.csv"])
        assert out.returncode == 2


class TestSeedPolicy:
    def test_stochastic_without_seed_rejected(self):
        out = run_cli(["teleport"])
        assert out.returncode == 2

    def test_teleport_with_seed(self):
        out = run_cli(["teleport", "--seed", "3"])
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["fidelity"] >= 1 - 1e-10


class TestAudit:
    def test_bounds_subcommand(self):
        out = run_cli(["bounds", "--dim", "2", "--theta", "0.2", "--seed", "3"])
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["gap_min_eig"] >= -1e-8
        assert payload["gill_massar"] <= 2 + 1e-7

    def test_adaptive_small(self):
        out = run_cli(["adaptive", "--theta", "0.8", "--n", "400", "--reps", "20", "--seed", "5"])
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["mean_scaled_mse"] > 0

    def test_decohere(self):
        out = run_cli(["decohere", "--nphase", "100", "--seed", "2"])
        payload = json.loads(out.stdout)
        assert out.returncode == 0
        assert payload["off_diag_norm"] < 2 / 100

    def test_instrument_choi(self):
        out = run_cli(["instrument", "--op", "choi-transpose"])
        payload = json.loads(out.stdout)
        assert payload["cp"] is False
        assert payload["min_choi_eig"] == pytest.approx(-1.0, abs=1e-9)

    def test_model_state(self):
        out = run_cli(["model", "--kind", "great-circle", "--theta", "0.0"])
        payload = json.loads(out.stdout)
        assert payload["trace"] == pytest.approx(1.0)

    def test_config_file_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 9}))
        out = run_cli(["--config", str(cfg), "teleport"])
        assert out.returncode == 0
        assert json.loads(out.stdout)["seed"] == 9

    def test_unknown_model_config_error(self):
        out = run_cli(["fisher", "--model", "bogus", "--theta", "0.1"])
        assert out.returncode == 2

    def test_format_flag_must_match_artifact(self):
        assert run_cli(["bell", "--format", "csv"]).returncode == 0
        assert run_cli(["bell", "--format", "json"]).returncode == 2

    def test_numerical_failure_exit_code(self):
        # an absurd master-equation step loses positivity -> exit 3
        out = run_cli(["traj", "--kind", "master", "--t-max", "9", "--dt", "3", "--seed", "1"])
        assert out.returncode == 3
        assert "numerical failure" in out.stderr
