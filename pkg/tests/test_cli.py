import json

import numpy as np
import pytest
from click.testing import CliRunner

from divwitness import serialization as ser
from divwitness.cli import main
from divwitness.families import dephasing_family


@pytest.fixture
def runner():
    return CliRunner()


def write_mapping(path, gammas):
    mapping = dephasing_family(gammas)
    path.write_text(ser.dumps(ser.mapping_to_json(mapping)))
    return path


class TestValidate:
    def test_valid_mapping(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.5])
        res = runner.invoke(main, ["validate", str(p)])
        assert res.exit_code == 0
        assert json.loads(res.output)["valid"] is True

    def test_invalid_choi(self, runner, tmp_path):
        choi = np.zeros((4, 4), dtype=complex)
        choi[0, 0] = choi[3, 3] = 1.0
        choi[0, 3] = choi[3, 0] = 1.6
        obj = {"dim_in": 2, "dim_out": 2,
               "choi": ser.matrix_to_json(choi)}
        p = tmp_path / "bad.json"
        p.write_text(ser.dumps(obj))
        res = runner.invoke(main, ["validate", str(p)])
        assert res.exit_code == 1

    def test_malformed_file(self, runner, tmp_path):
        p = tmp_path / "garbage.json"
        p.write_text("{oops")
        res = runner.invoke(main, ["validate", str(p)])
        assert res.exit_code == 2


class TestDivide:
    def test_divisible(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.8, 0.5])
        res = runner.invoke(main, ["divide", str(p), "--strict"])
        assert res.exit_code == 0
        payload = json.loads(res.output)
        assert payload["verdict"] == "divisible"
        assert len(payload["per_step"]) == 2

    def test_backflow_strict(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.5, 0.8])
        res = runner.invoke(main, ["divide", str(p), "--strict"])
        assert res.exit_code == 1
        # without --strict the analysis itself succeeded
        res2 = runner.invoke(main, ["divide", str(p)])
        assert res2.exit_code == 0
        assert json.loads(res2.output)["verdict"] == "not_divisible"

    def test_report_byte_identical(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.5, 0.8])
        a = runner.invoke(main, ["divide", str(p), "--seed", "7"]).output
        b = runner.invoke(main, ["divide", str(p), "--seed", "7"]).output
        assert a == b

    def test_out_and_plot(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.5, 0.8])
        out = tmp_path / "report.json"
        fig = tmp_path / "steps.png"
        res = runner.invoke(main, ["divide", str(p), "--out", str(out), "--plot", str(fig)])
        assert res.exit_code == 0
        assert json.loads(out.read_text())["verdict"] == "not_divisible"
        assert fig.exists() and fig.stat().st_size > 0


class TestWitness:
    def test_found(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.5, 0.8])
        out = tmp_path / "w.json"
        csv_path = tmp_path / "trace.csv"
        fig = tmp_path / "trace.png"
        res = runner.invoke(main, [
            "witness", str(p), "--step", "2", "--seed", "0",
            "--out", str(out), "--trace-csv", str(csv_path), "--plot", str(fig),
        ])
        assert res.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["witness"]["delta"] == pytest.approx(0.15, abs=1e-4)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "time_index,pguess"
        assert len(lines) == 4  # header + three time indices
        assert fig.exists() and fig.stat().st_size > 0

    def test_not_found(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.8, 0.5])
        res = runner.invoke(main, ["witness", str(p), "--step", "2", "--budget", "60"])
        assert res.exit_code == 1
        assert json.loads(res.output)["witness"] is None

    def test_bad_step(self, runner, tmp_path):
        p = write_mapping(tmp_path / "m.json", [1.0, 0.5])
        res = runner.invoke(main, ["witness", str(p), "--step", "5"])
        assert res.exit_code == 2


class TestPguess:
    def test_plain(self, runner, tmp_path):
        obj = {"states": [
            {"prob": 0.5, "rho": ser.matrix_to_json(np.diag([1.0, 0.0]))},
            {"prob": 0.5, "rho": ser.matrix_to_json(np.full((2, 2), 0.5))},
        ]}
        p = tmp_path / "e.json"
        p.write_text(ser.dumps(obj))
        res = runner.invoke(main, ["pguess", str(p)])
        assert res.exit_code == 0
        assert json.loads(res.output)["values"][0] == pytest.approx(0.8535534, abs=1e-6)

    def test_along_mapping(self, runner, tmp_path):
        m = write_mapping(tmp_path / "m.json", [1.0, 0.5, 0.8])
        phi_p = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        phi_m = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
        obj = {"states": [
            {"prob": 0.5, "rho": ser.matrix_to_json(np.outer(phi_p, phi_p.conj()))},
            {"prob": 0.5, "rho": ser.matrix_to_json(np.outer(phi_m, phi_m.conj()))},
        ]}
        e = tmp_path / "e.json"
        e.write_text(ser.dumps(obj))
        csv_path = tmp_path / "t.csv"
        res = runner.invoke(main, [
            "pguess", str(e), "--mapping", str(m), "--extended", "--csv", str(csv_path),
        ])
        assert res.exit_code == 0
        values = json.loads(res.output)["values"]
        assert np.allclose(values, [1.0, 0.75, 0.9], atol=1e-5)
        assert csv_path.read_text().splitlines()[0] == "time_index,pguess"


class TestSimulate:
    def test_flags_round_trip(self, runner, tmp_path):
        out = tmp_path / "m.json"
        res = runner.invoke(main, [
            "simulate", "--family", "dephasing", "--params", "1,0.5,0.8", "--out", str(out),
        ])
        assert res.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["generator"]["family"] == "dephasing"
        mapping = ser.mapping_from_json(payload)
        assert len(mapping) == 3
        div = runner.invoke(main, ["divide", str(out)])
        assert json.loads(div.output)["verdict"] == "not_divisible"

    def test_descriptor_file(self, runner, tmp_path):
        desc = tmp_path / "d.json"
        desc.write_text(ser.dumps({"family": "random_divisible", "params": [2, 3], "seed": 9}))
        res = runner.invoke(main, ["simulate", str(desc)])
        assert res.exit_code == 0
        mapping = ser.mapping_from_json(json.loads(res.output))
        assert len(mapping) == 4

    def test_collision_memory_flag(self, runner, tmp_path):
        res = runner.invoke(main, [
            "simulate", "--family", "collision", "--params", "1.5707963267948966,1.5707963267948966",
            "--memory",
        ])
        assert res.exit_code == 0
        mapping = ser.mapping_from_json(json.loads(res.output))
        assert len(mapping) == 3

    def test_unknown_family(self, runner, tmp_path):
        desc = tmp_path / "d.json"
        desc.write_text(ser.dumps({"family": "nope"}))
        res = runner.invoke(main, ["simulate", str(desc)])
        assert res.exit_code == 2

    def test_missing_input(self, runner):
        res = runner.invoke(main, ["simulate"])
        assert res.exit_code == 2

    def test_seed_env_var(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("DIVWITNESS_SEED", "17")
        res = runner.invoke(main, ["simulate", "--family", "random_divisible", "--params", "2,2"])
        payload = json.loads(res.output)
        assert payload["generator"]["seed"] == 17
