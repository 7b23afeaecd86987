import csv
import io
import json
import math
import subprocess
import sys

import pytest

from ergodic_leverage.cli import main
from ergodic_leverage.output import read_metadata


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def config_from(text):
    return "".join(f"{k}={v}\n" for k, v in read_metadata(text).items())


class TestReport:
    def test_base_market(self, capsys):
        code, out, _ = run(["report", "--riskless", "0.05", "--excess", "0.05", "--sigma", "0.18"],
                           capsys)
        assert code == 0
        doc = json.loads(out)
        assert set(doc) >= {"l_opt", "g_opt", "l_c_minus", "l_c_plus", "sharpe", "t_c_l1",
                            "t_c_lopt"}
        assert doc["l_opt"] == pytest.approx(1.5432, abs=1e-4)
        assert doc["l_c_plus"] == pytest.approx(3.8815, abs=1e-4)
        assert doc["l_c_minus"] == pytest.approx(-0.795, abs=1e-3)

    def test_no_excess(self, capsys):
        _, out, _ = run(["report", "--riskless", "0", "--excess", "0", "--sigma", "0.2"], capsys)
        assert json.loads(out)["l_opt"] == 0

    def test_volatile_market_horizon(self, capsys):
        _, out, _ = run(["report", "--riskless", "0", "--excess", "0.05", "--sigma", "0.45"],
                        capsys)
        assert json.loads(out)["t_c_l1"] == pytest.approx(77.10, abs=0.01)

    def test_no_real_roots(self, capsys):
        code, out, _ = run(["report", "--riskless", "-0.1", "--excess", "0.01", "--sigma", "0.2"],
                           capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["l_c"] is None and doc["l_c_plus"] is None

    def test_curve_has_infinite_horizons(self, capsys):
        _, out, _ = run(["report", "--riskless", "0.05", "--excess", "0.05", "--sigma-m", "0.18",
                         "--curve", "--points", "11"], capsys)
        doc = json.loads(out)
        assert doc["horizon"].count("inf") == 2

    def test_csv(self, capsys):
        _, out, _ = run(["report", "--riskless", "0.05", "--excess", "0.05", "--sigma", "0.18",
                         "--format", "csv"], capsys)
        rows = {r["key"]: r["value"] for r in csv_rows(out)}
        assert float(rows["t_c_l1"]) == pytest.approx(4.614, abs=1e-3)

    @pytest.mark.parametrize("argv", [
        ["report", "--riskless", "0.05", "--excess", "0.05"],
        ["report", "--riskless", "x", "--excess", "0.05", "--sigma", "0.18"],
        ["report", "--riskless", "0.05", "--excess", "0.05", "--sigma", "0"],
        ["report", "--riskless", "0.05", "--excess", "0.05", "--sigma", "nan"],
        ["report", "--bogus"],
        ["nope"],
        [],
    ])
    def test_usage_errors(self, argv, capsys):
        code, out, err = run(argv, capsys)
        assert code == 2
        assert out == ""
        assert len(err.strip().splitlines()) == 1


class TestKelly:
    def test_fraction(self, capsys):
        _, out, _ = run(["kelly", "--p", "0.6", "--fraction", "0.2"], capsys)
        [row] = csv_rows(out)
        assert float(row["growth"]) == pytest.approx(0.020136, abs=5e-7)

    def test_optimize(self, capsys):
        _, out, _ = run(["kelly", "--p", "0.6", "--optimize", "--format", "json"], capsys)
        assert json.loads(out)["fraction"] == pytest.approx(0.2, abs=1e-6)

    def test_ruin(self, capsys):
        _, out, _ = run(["kelly", "--p", "0.5", "--fraction", "1.0", "--format", "json"], capsys)
        assert json.loads(out)["growth"] == "-inf"
        _, out, _ = run(["kelly", "--p", "0.5", "--fraction", "1.0"], capsys)
        assert csv_rows(out)[0]["growth"] == "-inf"

    @pytest.mark.parametrize("p", ["1.5", "-0.1"])
    def test_bad_probability(self, p, capsys):
        assert run(["kelly", "--p", p, "--optimize"], capsys)[0] == 2


class TestDataCommands:
    def test_frontier_market_marker(self, capsys):
        _, out, _ = run(["frontier", "--riskless", "0.05", "--excess", "0.05", "--sigma-m", "0.18",
                         "--resolution", "11"], capsys)
        rows = csv_rows(out)
        [m] = [r for r in rows if r["record"] == "marker" and r["label"] == "M"]
        assert float(m["sigma"]) == 0.18 and float(m["mu"]) == pytest.approx(0.10, abs=1e-12)
        assert sum(r["record"] == "cell" for r in rows) == 121

    def test_error_envelope_coverage(self, capsys):
        _, out, _ = run(["error-envelope", "--mu", "0.05", "--sigma", "0.45", "--T-list",
                         "10,100,1000", "--samples", "1000", "--seed", "7"], capsys)
        summary = [r for r in csv_rows(out) if r["record"] == "summary"]
        assert [float(r["T"]) for r in summary] == [10, 100, 1000]
        for r in summary:
            assert 0.64 <= float(r["coverage_1sd"]) <= 0.73
        assert read_metadata(out)["seed"] == "7"

    def test_universes_metadata(self, capsys):
        _, out, _ = run(["universes", "--mu", "0.05", "--sigma", "0.45", "--T", "10",
                         "--steps", "10", "--ladder", "1,10", "--seed", "3"], capsys)
        meta = read_metadata(out)
        assert meta["seed"] == "3" and meta["ladder"] == "1,10"
        assert float(meta["derived.t_c"]) == pytest.approx(77.10, abs=0.01)
        rows = csv_rows(out)
        assert list(rows[0]) == ["t", "exemplar", "mean_N1", "mean_N10"]
        assert rows[0]["exemplar"] == "1" and len(rows) == 11

    def test_simulate_levered(self, capsys):
        _, out, _ = run(["simulate", "--riskless", "0.05", "--excess", "0.05", "--sigma-m", "0.18",
                         "--leverage", "12", "--T", "20", "--steps", "20", "--paths", "50",
                         "--format", "json"], capsys)
        doc = json.loads(out)
        assert len(doc["terminal_ratio"]) == 50
        assert doc["bankrupt_count"] == sum(doc["bankrupt"]) > 0
        assert "-inf" in doc["log_growth"]

    def test_simulate_needs_parameters(self, capsys):
        assert run(["simulate", "--T", "1"], capsys)[0] == 2
        assert run(["simulate", "--T", "1", "--leverage", "2"], capsys)[0] == 2

    def test_unwritable_output(self, tmp_path, capsys):
        target = tmp_path / "missing" / "out.csv"
        code, _, err = run(["kelly", "--p", "0.6", "--optimize", "--out", str(target)], capsys)
        assert code == 3 and err.startswith("error:")

    def test_seed_out_of_range(self, capsys):
        assert run(["simulate", "--mu", "0", "--sigma", "1", "--T", "1", "--seed", "-1"],
                   capsys)[0] == 2


class TestConfig:
    def test_flags_override_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# reference market\nriskless=0.05\nexcess=0.05\nsigma-m=0.18\nformat=csv\n")
        _, out, _ = run(["report", "--config", str(cfg)], capsys)
        assert read_metadata(out)["format"] == "csv"
        _, out, _ = run(["report", "--config", str(cfg), "--excess", "0.1", "--format", "json"],
                        capsys)
        assert json.loads(out)["l_opt"] == pytest.approx(0.1 / 0.18**2)

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("riskless=0.05\nexcess=0.05\nsigma-m=0.18\nwobble=1\n")
        assert run(["report", "--config", str(cfg)], capsys)[0] == 2

    def test_malformed_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("riskless 0.05\n")
        assert run(["report", "--config", str(cfg)], capsys)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run(["report", "--config", str(tmp_path / "none.cfg")], capsys)[0] == 2

    def test_wrong_command(self, tmp_path, capsys):
        cfg = tmp_path / "k.cfg"
        cfg.write_text("command=kelly\np=0.6\n")
        assert run(["report", "--config", str(cfg)], capsys)[0] == 2


STOCHASTIC_RUNS = [
    ["universes", "--mu", "0.05", "--sigma", "0.45", "--T", "150", "--steps", "1500",
     "--ladder", "1,10,100,1000,10000", "--seed", "1"],
    ["error-envelope", "--mu", "0.05", "--sigma", "0.45", "--T-list", "10,100,1000",
     "--samples", "1000", "--seed", "7"],
    ["simulate", "--mu", "0.05", "--sigma", "0.45", "--T", "10", "--steps", "100",
     "--paths", "2000", "--seed", "5"],
    ["simulate", "--riskless", "0.05", "--excess", "0.05", "--sigma-m", "0.18", "--leverage",
     "1.5432", "--T", "10", "--steps", "640", "--paths", "500", "--seed", "5", "--format", "json"],
]


def produce(tmp_path, argv, name, threads):
    path = tmp_path / name
    assert main(argv + ["--threads", str(threads), "--out", str(path)]) == 0
    return path.read_bytes()


class TestReproducibility:
    @pytest.mark.parametrize("argv", STOCHASTIC_RUNS, ids=lambda a: a[0])
    def test_byte_identical(self, tmp_path, argv):
        a = produce(tmp_path, argv, "a", 1)
        b = produce(tmp_path, argv, "b", 1)
        c = produce(tmp_path, argv, "c", 8)
        assert a == b == c

    @pytest.mark.parametrize("argv", STOCHASTIC_RUNS, ids=lambda a: a[0])
    def test_rerun_from_metadata(self, tmp_path, argv):
        first = produce(tmp_path, argv, "first", 2).decode()
        cfg = tmp_path / "again.cfg"
        cfg.write_text(config_from(first))
        again = produce(tmp_path, [argv[0], "--config", str(cfg)], "again", 3).decode()
        assert again == first

    def test_seed_changes_output(self, tmp_path):
        argv = STOCHASTIC_RUNS[2]
        other = argv[:-1] + ["6"]
        assert produce(tmp_path, argv, "a", 1) != produce(tmp_path, other, "b", 1)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ergodic_leverage", "kelly", "--p", "0.6", "--optimize"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert float(csv_rows(proc.stdout)[0]["fraction"]) == pytest.approx(0.2, abs=1e-6)
    bad = subprocess.run([sys.executable, "-m", "ergodic_leverage", "kelly"],
                         capture_output=True, text=True, check=False)
    assert bad.returncode == 2 and bad.stderr.startswith("error:")


def test_precision_flag(capsys):
    _, out, _ = run(["kelly", "--p", "0.6", "--fraction", "0.2", "--precision", "4"], capsys)
    assert csv_rows(out)[0]["growth"] == "0.02014"
    assert not math.isnan(float(csv_rows(out)[0]["growth"]))
