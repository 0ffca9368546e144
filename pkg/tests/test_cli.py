"""Tests for the modint command-line interface."""

import csv
import io
import json
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from modint.cli import main


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


class TestTable1:
    def test_csv_values(self):
        code, out, _ = run_cli(["table1"])
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["N", "S1", "S2"]
        table = {int(r[0]): (r[1], r[2]) for r in rows[1:]}
        assert table[1] == ("0.00", "0.00")
        assert table[2] == ("0.61", "0.30")
        assert table[3] == ("0.71", "0.46")
        assert table[4] == ("0.79", "0.55")
        assert table[10] == ("0.92", "0.76")
        assert table[100] == ("0.99", "0.96")

    def test_json_format(self):
        code, out, _ = run_cli(["table1", "--format", "json"])
        assert code == 0
        data = json.loads(out)
        by_rank = {d["N"]: d for d in data}
        assert by_rank[2]["S1"] == 0.61
        assert by_rank[2]["S2"] == 0.3


class TestConstant:
    def test_all_methods(self):
        code, out, _ = run_cli(
            ["constant", "--method", "all", "--periods", "16", "--points-per-period", "64"]
        )
        assert code == 0
        d = json.loads(out)
        assert d["kummer"]["c"] == pytest.approx(0.0782350873517026, abs=1e-10)
        assert d["perturbative"]["c"] == pytest.approx(7 / 90, abs=1e-15)
        assert d["brute"]["c"] == pytest.approx(d["kummer"]["c"], abs=2e-3)

    def test_single_method(self):
        code, out, _ = run_cli(["constant", "--method", "perturbative"])
        assert code == 0
        d = json.loads(out)
        assert set(d) == {"perturbative"}


class TestCriterion:
    def test_mpe_violates(self):
        code, out, _ = run_cli(["criterion", "--state", "mpe", "--N", "2"])
        assert code == 0
        d = json.loads(out)
        assert d["violated"] is True
        assert d["lhs"] < d["bound"]

    def test_classical_does_not(self):
        code, out, _ = run_cli(["criterion", "--state", "classical", "--N", "2"])
        assert code == 0
        d = json.loads(out)
        assert d["violated"] is False


class TestRobustness:
    def test_threshold_and_visibility(self):
        code, out, _ = run_cli(["robustness", "--N", "2", "--bisection"])
        assert code == 0
        d = json.loads(out)
        assert 0.79 < d["epsilon_star_closed_form"] < 0.80
        assert d["epsilon_star_bisection"] == pytest.approx(
            d["epsilon_star_closed_form"], abs=1e-3
        )
        assert d["visibility_at_threshold"] == pytest.approx(0.21, abs=0.01)


class TestFringes:
    def test_multislit_momentum_profile(self):
        code, out, _ = run_cli(
            ["fringes", "--state", "multislit", "--N", "2", "--L", "1.0", "--sigma", "0.05"]
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        p = np.array([float(r[0]) for r in rows[1:]])
        dens = np.array([float(r[1]) for r in rows[1:]])
        # fringe maxima at multiples of h/L = 2*pi
        peak = p[np.argmax(dens)]
        assert abs(peak - 2 * np.pi * round(peak / (2 * np.pi))) < 0.1

    def test_mpe_relative_cut(self):
        code, out, _ = run_cli(["fringes", "--state", "mpe", "--N", "2"])
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][0].startswith("x1_minus_x2")
        dens = np.array([float(r[1]) for r in rows[1:]])
        assert dens.max() > 10 * dens.min()  # fringes present


class TestSample:
    def test_estimate_json(self):
        code, out, _ = run_cli(["sample", "--state", "mpe", "--n", "5000", "--seed", "3"])
        assert code == 0
        d = json.loads(out)
        assert d["n"] == 5000
        assert d["verdict"] == "violated"


class TestPropagate:
    def test_csv_output(self, tmp_path):
        path = tmp_path / "prop.csv"
        code, out, _ = run_cli(
            [
                "propagate",
                "--state",
                "multislit",
                "--N",
                "2",
                "--sigma",
                "0.5",
                "--time",
                "0.5",
                "--grid-points",
                "4096",
                "--xmin",
                "-32",
                "--xmax",
                "32",
                "--output",
                str(path),
            ]
        )
        assert code == 0
        assert out == ""
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["x [length]", "re", "im", "density"]
        dens = np.array([float(r[3]) for r in rows[1:]])
        x = np.array([float(r[0]) for r in rows[1:]])
        assert np.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-6)

    def test_two_particle_state_rejected(self):
        code, _, err = run_cli(["propagate", "--state", "mpe"])
        assert code == 2
        assert "single-particle" in err


class TestProtocol:
    def test_sweep_csv(self):
        code, out, _ = run_cli(
            [
                "protocol",
                "--N",
                "2",
                "--sigma",
                "8",
                "--meeting-time",
                "60",
                "--max-stagger",
                "10",
                "--steps",
                "3",
            ]
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        vis = [float(r[1]) for r in rows[1:]]
        assert vis[0] == pytest.approx(1.0, abs=1e-9)
        assert vis[0] > vis[1] > vis[2]


class TestConfig:
    def test_config_supplies_values(self, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("format = json\n\n# comment line\n")
        code, out, _ = run_cli(["--config", str(cfg), "table1"])
        assert code == 0
        json.loads(out)  # json format applied

    def test_explicit_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("format = json\n")
        code, out, _ = run_cli(["--config", str(cfg), "table1", "--format", "csv"])
        assert code == 0
        assert out.splitlines()[0] == "N,S1,S2"

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("bogus = 1\n")
        code, _, err = run_cli(["--config", str(cfg), "table1"])
        assert code == 2
        assert "unknown config key" in err

    def test_malformed_line_rejected(self, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("not a pair\n")
        code, _, err = run_cli(["--config", str(cfg), "table1"])
        assert code == 2
        assert "key=value" in err

    def test_boolean_switch(self, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("bisection = true\n")
        code, out, _ = run_cli(["--config", str(cfg), "robustness"])
        assert code == 0
        assert "epsilon_star_bisection" in json.loads(out)

    def test_missing_config_file(self):
        code, _, err = run_cli(["--config", "/no/such/file", "table1"])
        assert code == 2
        assert "error:" in err


class TestErrors:
    def test_invalid_value_exits_2(self):
        code, _, err = run_cli(["criterion", "--state", "mpe", "--N", "0"])
        assert code == 2
        assert err.startswith("error:")
