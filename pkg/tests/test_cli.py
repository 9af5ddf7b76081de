import json
import math

import numpy as np
import pytest

from orlicz_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCalculusCommands:
    def test_gibbs_radius(self, capsys):
        code, out, err = run(capsys, "gibbs", "--V", "power:2", "--R", "1")
        assert code == 0
        d = json.loads(out)
        assert d["alpha"] == pytest.approx(-0.5, abs=1e-12)
        assert d["log_partition"] == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-10)
        assert d["m_V"] == pytest.approx(1.0, abs=1e-10)
        assert d["config"]["seed"] == 0
        assert err.startswith("# config: ")

    def test_gibbs_alpha(self, capsys):
        code, out, _ = run(capsys, "gibbs", "--V", "power:1", "--alpha", "-2")
        assert code == 0
        assert json.loads(out)["log_partition"] == pytest.approx(0.0, abs=1e-12)

    def test_thresholds(self, capsys):
        code, out, _ = run(capsys, "thresholds", "--V1", "power:2", "--V2", "power:1", "--R", "0.75")
        d = json.loads(out)
        assert code == 0
        assert d["r_bar"] == pytest.approx(1 / math.sqrt(2), abs=1e-9)
        assert d["regime"] == "Intermediate"

    def test_maxent(self, capsys):
        code, out, _ = run(capsys, "maxent", "--V1", "power:2", "--c1", "1", "--V2", "power:1", "--c2", "0.5")
        d = json.loads(out)
        assert code == 0
        assert d["mu2_star"] == pytest.approx(2.0, abs=1e-9) and d["regime"] == "Subcritical"

    def test_thinshell_inf_serialized(self, capsys):
        code, out, _ = run(capsys, "thinshell", "--V", "power:4", "--R", "1", "--p", "2", "--x", "-0.5", "0.5")
        pts = json.loads(out)["points"]
        assert code == 0
        assert pts[0]["rate"] == "inf"
        assert pts[1]["rate"] > 0

    def test_volume(self, capsys):
        code, out, _ = run(capsys, "volume", "--p", "2", "--R", "1", "--n", "10", "1000")
        d = json.loads(out)
        assert code == 0
        assert d["limit"] == pytest.approx(0.5 * math.log(2 * math.pi * math.e), abs=1e-10)
        assert d["table"][1]["gap"] < d["table"][0]["gap"]

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        code, out, _ = run(capsys, "gibbs", "--V", "power:2", "--R", "1", "--out", str(path))
        assert code == 0 and out == ""
        assert json.loads(path.read_text())["alpha"] == pytest.approx(-0.5)


class TestConfigFiles:
    def test_dump_config_round_trip(self, capsys, tmp_path):
        code, out, _ = run(capsys, "gibbs", "--V", "huber:1.0", "--R", "0.3", "--seed", "4", "--dump-config")
        assert code == 0
        dumped = json.loads(out)
        assert dumped["command"] == "gibbs" and dumped["seed"] == 4
        cfg = tmp_path / "c.json"
        dumped.pop("out")
        cfg.write_text(json.dumps(dumped))
        code, out2, _ = run(capsys, "--config", str(cfg), "--dump-config")
        assert code == 0
        again = json.loads(out2)
        assert {k: again[k] for k in dumped} == dumped

    def test_flag_overrides_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"command": "gibbs", "V": "power:2", "R": 1.0}))
        code, out, _ = run(capsys, "gibbs", "--config", str(cfg), "--R", "2")
        assert code == 0
        assert json.loads(out)["alpha"] == pytest.approx(-0.25)

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"command": "gibbs", "V": "power:2", "R": 1.0, "bogus": 3}))
        code, _, err = run(capsys, "--config", str(cfg))
        assert code == 2 and "bogus" in err

    def test_command_mismatch(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"command": "volume", "p": 2, "R": 1}))
        code, _, _ = run(capsys, "gibbs", "--config", str(cfg))
        assert code == 2

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "gibbs", "--config", str(tmp_path / "none.json"))
        assert code == 2


class TestExitCodes:
    def test_parse_error(self, capsys):
        code, _, err = run(capsys, "gibbs", "--V", "power:", "--R", "1")
        assert code == 2
        assert "^" in err

    def test_argparse_error(self, capsys):
        assert run(capsys, "gibbs", "--V", "power:2")[0] == 2
        assert run(capsys, "nope")[0] == 2

    def test_domain_error(self, capsys):
        assert run(capsys, "gibbs", "--V", "power:2", "--alpha", "0.5")[0] == 2

    def test_numerical_error(self, capsys):
        code, _, err = run(capsys, "maxent", "--V1", "power:2", "--c1", "1.44", "--op1", "eq",
                           "--V2", "power:4", "--c2", "1")
        assert code == 3
        assert "numerical error" in err

    def test_failing_experiment(self, capsys, tmp_path):
        cfg = tmp_path / "v.json"
        cfg.write_text(json.dumps({"experiment": "volume", "n": [10, 20], "gap_tolerance": 1e-9}))
        code, out, err = run(capsys, "experiment", "--config", str(cfg))
        assert code == 1
        assert json.loads(out)["pass"] is False
        assert "FAIL" in err

    def test_passing_experiment_to_file(self, capsys, tmp_path):
        cfg = tmp_path / "v.json"
        cfg.write_text(json.dumps({"experiment": "volume", "n": [10, 100, 1000, 5000]}))
        out = tmp_path / "r.json"
        code, _, _ = run(capsys, "experiment", "--config", str(cfg), "--out", str(out))
        assert code == 0
        assert json.loads(out.read_text())["pass"] is True
        assert (tmp_path / "r.csv").exists()

    def test_experiment_needs_config(self, capsys):
        assert run(capsys, "experiment")[0] == 2


class TestSample:
    def read_csv(self, text):
        lines = text.splitlines()
        meta = json.loads(lines[0][2:])
        data = np.loadtxt(lines[2:], delimiter=",", ndmin=2)
        return meta, lines[1].split(","), data

    def test_lp_exact(self, capsys):
        code, out, _ = run(capsys, "sample", "--mode", "lp-exact", "--p", "1", "--n", "4", "--count", "50",
                           "--seed", "3")
        meta, header, X = self.read_csv(out)
        assert code == 0
        assert header == ["x1", "x2", "x3", "x4"] and X.shape == (50, 4)
        assert np.all(np.abs(X).sum(axis=1) <= 4 + 1e-12)
        assert meta["seed"] == 3

    def test_gibbs_reproducible(self, capsys):
        a = run(capsys, "sample", "--mode", "gibbs", "--V", "power:1", "--R", "1", "--count", "20")[1]
        b = run(capsys, "sample", "--mode", "gibbs", "--V", "power:1", "--R", "1", "--count", "20")[1]
        assert a == b

    def test_mcmc_two_balls(self, capsys):
        code, out, _ = run(capsys, "sample", "--mode", "mcmc", "--V", "power:2", "--V2", "power:1", "--R2", "0.5",
                           "--n", "10", "--count", "40")
        meta, _, X = self.read_csv(out)
        assert code == 0 and X.shape == (40, 10)
        assert np.all(np.abs(X).sum(axis=1) <= 5.0)
        assert len(meta["constraints"]) == 2

    def test_conditional(self, capsys):
        code, out, _ = run(capsys, "sample", "--mode", "conditional", "--V1", "power:2", "--V2", "power:1",
                           "--R", "0.5", "--n", "10", "--count", "30", "--k", "2")
        _, header, X = self.read_csv(out)
        assert code == 0 and header == ["x1", "x2"] and X.shape == (30, 2)

    def test_conditional_needs_v2(self, capsys):
        assert run(capsys, "sample", "--mode", "conditional", "--n", "5")[0] == 2


def test_verify(capsys):
    code, out, _ = run(capsys, "verify")
    d = json.loads(out)
    assert code == 0 and d["pass"]
    assert len(d["checks"]) == 8
