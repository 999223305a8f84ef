"""End-to-end tests of the command-line interface (in-process)."""

import json

import pytest

from requ_gap.cli import main
from requ_gap.network import deserialize, realize
import numpy as np


def run(argv):
    return main(argv)


class TestBuildHat:
    def test_writes_network_and_verify_report(self, tmp_path):
        out = tmp_path / "hat.json"
        code = run(
            ["build-hat", "--n", "1", "--L", "5", "--M", "2", "--d", "1",
             "--out", str(out)]
        )
        assert code == 0
        net = deserialize(out.read_bytes())
        assert net.depth() == 5
        report = json.loads((tmp_path / "hat.json.verify.json").read_text())
        assert report["pass"]
        assert report["max_rel_err"] <= 1e-9

    def test_precondition_violation_exits_2(self, tmp_path, capsys):
        code = run(["build-hat", "--L", "4", "--out", str(tmp_path / "x.json")])
        assert code == 2
        assert "precondition" in capsys.readouterr().err

    def test_stdout_mode(self, capsys):
        code = run(["build-hat", "--n", "1", "--L", "5"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["pass"]


class TestVerifyHat:
    def test_pass_roundtrip_against_file(self, tmp_path):
        out = tmp_path / "hat.json"
        assert run(["build-hat", "--M", "2", "--out", str(out)]) == 0
        report_out = tmp_path / "verify.json"
        code = run(
            ["verify-hat", "--M", "2", "--network", str(out), "--out", str(report_out)]
        )
        assert code == 0
        report = json.loads(report_out.read_text())
        assert report["pass"] and report["file_matches"]

    def test_mismatched_params_fail_file_compare(self, tmp_path):
        out = tmp_path / "hat.json"
        assert run(["build-hat", "--M", "2", "--out", str(out)]) == 0
        code = run(["verify-hat", "--M", "4", "--network", str(out)])
        assert code == 1

    def test_bad_params_exit_2(self):
        assert run(["verify-hat", "--M", "0.5"]) == 2


class TestRates:
    def test_worked_example(self, tmp_path, capsys):
        code = run(["rates", "--alpha", "1", "--d", "1", "--depth-cap", "5"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["gamma_flat"] == 15.5
        assert doc["lower_rate"] == pytest.approx(1 / 16.5)
        assert doc["upper_rate"] == pytest.approx(64 / 23.5)

    def test_numeric_estimate_included(self, capsys):
        code = run(["rates", "--n-max", "10000"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["gamma_numeric"] == pytest.approx(15.5, abs=0.1)

    def test_unbounded_policy_degenerate_exit_1(self, capsys):
        code = run(["rates", "--depth-cap", "inf"])
        assert code == 1
        assert json.loads(capsys.readouterr().out)["degenerate"]


class TestLipschitz:
    def test_bound_dominates_empirical(self, capsys):
        code = run(["lipschitz", "--n", "1", "--L", "5", "--M", "1", "--d", "1"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["pass"]
        assert doc["ratio_log2"] <= 0.0


class TestSweepCommands:
    def test_hardness_requires_out(self, capsys):
        assert run(["hardness"]) == 2
        assert "--out" in capsys.readouterr().err

    def test_hardness_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run(
            ["hardness", "--algorithm", "zero", "--m-list", "4,16,64",
             "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "m,measured_avg_error,lower_bound,unseen_count,amplitude,pass"
        assert len(lines) == 4
        sidecar = json.loads((tmp_path / "sweep.csv.json").read_text())
        assert sidecar["pass"]
        assert sidecar["config"]["gamma"] == 15.0  # default: closed form - 0.5

    def test_hardness_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["hardness", "--algorithm", "grid", "--m-list", "4,16", "--seed", "3"]
        assert run(argv + ["--out", str(a)]) == 0
        assert run(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_hardness_json_format(self, tmp_path):
        out = tmp_path / "sweep.json"
        code = run(
            ["hardness", "--m-list", "4,16", "--format", "json", "--out", str(out)]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["rows"][0]["m"] == 4

    def test_hardness_unknown_algorithm_exit_2(self, tmp_path, capsys):
        code = run(
            ["hardness", "--algorithm", "oracle", "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2

    def test_mc_hardness(self, tmp_path):
        out = tmp_path / "mc.csv"
        code = run(["mc-hardness", "--m-list", "4,16", "--out", str(out)])
        assert code == 0
        sidecar = json.loads((tmp_path / "mc.csv.json").read_text())
        assert all(r["budget_ok"] for r in sidecar["rows"])

    def test_upper_bound(self, tmp_path):
        out = tmp_path / "ub.csv"
        code = run(
            ["upper-bound", "--m-list", "16,64,256,1024", "--out", str(out)]
        )
        assert code == 0
        sidecar = json.loads((tmp_path / "ub.csv.json").read_text())
        assert sidecar["fitted_exponent"] <= sidecar["params"]["slope_target"]


class TestConfigHandling:
    def test_config_file_merged(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"alpha": 2.0, "d": 2}))
        code = run(["rates", "--config", str(cfg)])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["config"]["alpha"] == 2.0 and doc["config"]["d"] == 2

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"alpha": 2.0}))
        code = run(["rates", "--config", str(cfg), "--alpha", "3"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["config"]["alpha"] == 3.0

    def test_unknown_keys_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"alfa": 2.0}))
        code = run(["rates", "--config", str(cfg)])
        assert code == 2
        assert "unknown config keys" in capsys.readouterr().err

    def test_invalid_json_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert run(["rates", "--config", str(cfg)]) == 2


class TestSumCheck:
    def test_default_pass(self, capsys):
        code = run(["sum-check"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["pass"]
        assert doc["sum_max_err"] <= 1e-12
        assert doc["sum_weight_count"] <= doc["sum_weight_bound"]

    def test_bad_width_exit_2(self):
        assert run(["sum-check", "--M1", "0.5"]) == 2


class TestEnvironment:
    def test_worker_cap_recorded(self, tmp_path, monkeypatch):
        monkeypatch.setenv("REQU_GAP_THREADS", "4")
        out = tmp_path / "s.csv"
        assert run(["hardness", "--m-list", "4,16", "--out", str(out)]) == 0
        sidecar = json.loads((tmp_path / "s.csv.json").read_text())
        assert sidecar["worker_cap"] == 4

    def test_results_identical_across_caps(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        monkeypatch.setenv("REQU_GAP_THREADS", "1")
        assert run(["hardness", "--m-list", "4,16", "--out", str(a)]) == 0
        monkeypatch.setenv("REQU_GAP_THREADS", "8")
        assert run(["hardness", "--m-list", "4,16", "--out", str(b)]) == 0
        assert a.read_text() == b.read_text()
