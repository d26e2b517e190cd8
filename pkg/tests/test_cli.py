import json
from pathlib import Path

import numpy as np
import pytest

from chreduct.cli import _json17, _parse_params, run

CASES = Path(__file__).resolve().parents[1] / "cases"


class TestHelpers:
    def test_parse_params_scalars_and_vectors(self):
        params = _parse_params(["I=1,2,3", "mgl=1.5"])
        assert params["I"] == [1.0, 2.0, 3.0]
        assert params["mgl"] == 1.5

    def test_parse_params_semicolons(self):
        params = _parse_params(["I=1,2,3;J=0.5"])
        assert params["J"] == 0.5

    def test_parse_params_malformed(self):
        with pytest.raises(ValueError, match="key=value"):
            _parse_params(["oops"])

    def test_json17_round_trips_floats(self):
        doc = {"x": 0.1 + 0.2, "v": [1.0 / 3.0], "flag": True, "none": None, "n": 3}
        text = _json17(doc)
        back = json.loads(text)
        assert back["x"] == 0.1 + 0.2
        assert back["v"][0] == 1.0 / 3.0
        assert back["flag"] is True and back["none"] is None and back["n"] == 3

    def test_json17_key_order_stable(self):
        text = _json17({"b": 1.0, "a": 2.0})
        assert text.index('"b"') < text.index('"a"')


class TestSimulate:
    def test_csv_and_report(self, tmp_path):
        out = tmp_path / "traj.csv"
        report = tmp_path / "report.json"
        code = run(["simulate", "--system", "rigid-body", "--params", "I=1,2,3",
                    "--state", "1,1,1", "--t-end", "1.0", "--dt", "1e-3",
                    "--out", str(out), "--report", str(report)])
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert header == "t,mu0,mu1,mu2,energy,spin_sq"
        doc = json.loads(report.read_text())
        assert doc["tool"] == "chreduct"
        assert doc["pass"] is True

    def test_deterministic_output(self, tmp_path):
        argv = ["simulate", "--system", "heavy-top", "--params", "I=1,2,3",
                "--params", "mgl=1.5", "--state", "0.5,-0.2,1,0.05,0.1,0.99",
                "--t-end", "0.5", "--dt", "1e-3"]
        out, report = tmp_path / "t.csv", tmp_path / "r.json"
        full_argv = argv + ["--out", str(out), "--report", str(report)]
        snapshots = []
        for _ in range(2):
            assert run(full_argv) == 0
            snapshots.append((out.read_bytes(), report.read_bytes()))
        assert snapshots[0] == snapshots[1]

    def test_wrong_state_length(self, capsys):
        code = run(["simulate", "--system", "rigid-body", "--params", "I=1,2,3",
                    "--state", "1,1"])
        assert code == 3
        assert "components" in capsys.readouterr().err

    def test_plot_written(self, tmp_path):
        fig = tmp_path / "traj.png"
        code = run(["simulate", "--system", "rigid-body", "--params", "I=1,2,3",
                    "--state", "1,1,1", "--t-end", "0.2", "--dt", "1e-2",
                    "--report", str(tmp_path / "r.json"), "--plot", str(fig)])
        assert code == 0
        assert fig.stat().st_size > 0


class TestChecks:
    def test_check_related_passes(self, tmp_path):
        out = tmp_path / "rel.json"
        code = run(["check-related", "--n-samples", "25", "--seed", "1",
                    "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["pass"] is True
        assert doc["max_residual"] < 1e-10

    def test_check_orbit(self, tmp_path):
        out = tmp_path / "orb.json"
        code = run(["check-orbit", "--system", "rigid-body-rotors",
                    "--params", "I=1,2,3;J=0.5", "--state", "1,0.5,-0.3,0,0.2",
                    "--t-end", "2.0", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["pass"] is True

    def test_check_equiv_oscillator(self, tmp_path):
        out = tmp_path / "eq.json"
        code = run(["check-equiv", "--pair", "rescaled-oscillator",
                    "--n-samples", "30", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["pass"] is True
        assert doc["checks"][0]["closed_loop_residual"] < 1e-6

    def test_check_equiv_random_linear(self, tmp_path):
        out = tmp_path / "eqr.json"
        code = run(["check-equiv", "--pair", "random-linear", "--n-pairs", "3",
                    "--n-samples", "15", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["pass"] is True

    def test_check_hj_solution_and_nonsolution(self, tmp_path):
        code = run(["check-hj", "--case", str(CASES / "free-particle.json"),
                    "--out", str(tmp_path / "hj.json")])
        assert code == 0
        code = run(["check-hj", "--case", str(CASES / "oscillator-nonsolution.json"),
                    "--out", str(tmp_path / "hj2.json")])
        # the case is expected to be a non-solution, so the suite still passes
        assert code == 0
        doc = json.loads((tmp_path / "hj2.json").read_text())
        assert doc["checks"][0]["residual"]["pass"] is False
        assert doc["checks"][0]["as_expected"] is True

    def test_invariants(self, tmp_path):
        out = tmp_path / "inv.json"
        code = run(["invariants", "--n-samples", "30", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["pass"] is True
        assert any(r["check"] == "so3-pairing" for r in doc["checks"])

    def test_list_systems(self, capsys):
        assert run(["list-systems"]) == 0
        lines = capsys.readouterr().out.split()
        assert lines == sorted(["rigid-body", "heavy-top", "rigid-body-rotors",
                                "heavy-top-rotors"])


class TestExitCodes:
    def test_unknown_system_exit_2(self, capsys):
        code = run(["simulate", "--system", "pendulum", "--state", "1,1,1"])
        assert code == 2
        assert "rigid-body" in capsys.readouterr().err

    def test_malformed_json_exit_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = run(["check-hj", "--case", str(bad)])
        assert code == 3

    def test_unwritable_path_exit_4(self, tmp_path, capsys):
        missing_dir = tmp_path / "no-such-dir" / "out.json"
        code = run(["check-related", "--n-samples", "5", "--out", str(missing_dir)])
        assert code == 4

    def test_failing_check_exit_1(self, tmp_path):
        # impossible tolerance forces a check failure without any error
        code = run(["check-related", "--n-samples", "5", "--tolerance", "1e-30",
                    "--out", str(tmp_path / "r.json")])
        assert code == 1

    def test_config_file_overrides_flags(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_samples": 5, "tolerance": 1e-30}))
        code = run(["check-related", "--config", str(cfg),
                    "--out", str(tmp_path / "r.json")])
        assert code == 1
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["config"]["n_samples"] == 5

    def test_missing_config_exit_4(self):
        assert run(["check-related", "--config", "/no/such/file.json"]) == 4
