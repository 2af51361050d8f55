import csv
import json

import numpy as np
import pytest

from binarycorr.cli import main
from binarycorr.core import Algorithm, Exchangeable, General, MarginalVector, spec_digest

EX1 = ["--structure", "exchangeable", "--p", "0.1,0.2,0.3", "--rho", "0.3"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestGen:
    def test_round_trip(self, capsys, tmp_path):
        out = tmp_path / "x.csv"
        code, stdout, _ = run(capsys, "gen", *EX1, "--n", "5", "--seed", "42", "--out", str(out))
        assert code == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["x1", "x2", "x3"]
        data = np.array(rows[1:], dtype=int)
        assert data.shape == (5, 3) and set(np.unique(data)) <= {0, 1}
        meta = json.loads((tmp_path / "x.csv.meta.json").read_text())
        assert meta["seed"] == 42 and meta["algorithm"] == "alg1" and (meta["n"], meta["m"]) == (5, 3)
        assert meta["spec_digest"] == spec_digest(MarginalVector([0.1, 0.2, 0.3]), Exchangeable(0.3), Algorithm.EXCHANGEABLE)
        assert json.loads(stdout)["spec_digest"] == meta["spec_digest"]

    def test_byte_identical(self, capsys, tmp_path):
        a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
        run(capsys, "gen", *EX1, "--n", "500", "--seed", "42", "--out", str(a))
        run(capsys, "gen", *EX1, "--n", "500", "--seed", "42", "--out", str(b))
        run(capsys, "gen", *EX1, "--n", "500", "--seed", "42", "--out", str(c), "--serial")
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()
        assert b"\r" not in a.read_bytes()

    def test_default_seed_recorded(self, capsys, tmp_path):
        out = tmp_path / "x.csv"
        run(capsys, "gen", *EX1, "--n", "3", "--out", str(out))
        assert json.loads((tmp_path / "x.csv.meta.json").read_text())["seed"] == 0

    def test_no_header_and_json(self, capsys, tmp_path):
        out = tmp_path / "x.csv"
        run(capsys, "gen", *EX1, "--n", "4", "--out", str(out), "--no-header")
        assert out.read_text().splitlines()[0].count(",") == 2 and "x1" not in out.read_text()
        js = tmp_path / "x.json"
        assert run(capsys, "gen", *EX1, "--n", "4", "--out", str(js), "--format", "json")[0] == 0
        payload = json.loads(js.read_text())
        assert payload["columns"] == ["x1", "x2", "x3"] and len(payload["rows"]) == 4

    def test_output_dir_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("BINARYCORR_OUTPUT_DIR", str(tmp_path))
        code, stdout, _ = run(capsys, "gen", *EX1, "--n", "2")
        assert code == 0 and json.loads(stdout)["output"].startswith(str(tmp_path))

    def test_infeasible_general(self, capsys, tmp_path):
        r = tmp_path / "R.csv"
        r.write_text("1,0\n0,1\n")
        code, stdout, _ = run(capsys, "gen", "--structure", "general", "--corr-file", str(r),
                              "--p", "0.1,0.4", "--rho-entry", "0.9", "--n", "5", "--out", str(tmp_path / "o.csv"))
        assert code == 2
        rep = json.loads(stdout)
        assert rep["verdict"] == "PrenticeViolated"
        assert rep["violations"][0]["interval"][1] == pytest.approx(0.40825, abs=1e-5)
        assert not (tmp_path / "o.csv").exists()

    @pytest.mark.parametrize("argv", [
        ["--n", "0"],
        ["--n", "5", "--rho", "0.1,0.2"],
        ["--n", "5", "--p", "0.1,0.2", "--p-file", "p.txt"],
        ["--n", "5", "--alg", "9"],
        ["--n", "abc"],
    ])
    def test_usage_errors(self, capsys, argv):
        base = ["gen", "--structure", "exchangeable", "--rho", "0.3"]
        if "--p" not in argv:
            base += ["--p", "0.1,0.2,0.3"]
        with pytest.raises(SystemExit) as e:
            raise SystemExit(main(base + argv))
        assert e.value.code == 64

    def test_bad_marginal_is_usage(self, capsys):
        assert run(capsys, "gen", "--structure", "exchangeable", "--p", "0,0.5", "--rho", "0.1", "--n", "2")[0] == 64

    def test_io_error(self, capsys, tmp_path):
        code, _, _ = run(capsys, "gen", *EX1, "--n", "2", "--out", str(tmp_path / "missing" / "x.csv"))
        assert code == 1

    def test_p_sources(self, capsys, tmp_path):
        pf = tmp_path / "p.txt"
        pf.write_text("0.1\n0.2\n0.3\n")
        out = tmp_path / "x.csv"
        assert run(capsys, "gen", "--structure", "exchangeable", "--p-file", str(pf), "--rho", "0.3",
                   "--n", "3", "--out", str(out))[0] == 0
        code, stdout, _ = run(capsys, "gen", "--structure", "decaying", "--p-uniform", "0.5,0.8,50,7",
                              "--rho", "0.3", "--n", "3", "--out", str(out))
        assert code == 0 and json.loads(stdout)["m"] == 50
        p = json.loads((tmp_path / "x.csv.meta.json").read_text())["p"]
        assert min(p) > 0.5 and max(p) < 0.8

    def test_corr_file_asymmetric(self, capsys, tmp_path):
        r = tmp_path / "R.csv"
        r.write_text("1,0.2\n0.3,1\n")
        assert run(capsys, "gen", "--structure", "general", "--corr-file", str(r), "--p", "0.5,0.5", "--n", "2")[0] == 64

    def test_kdep_bands(self, capsys, tmp_path):
        code, stdout, _ = run(capsys, "gen", "--structure", "k-dep", "--p", "0.5,0.5,0.5,0.5", "--band", "0.1",
                              "--band", "0.05,0.05", "--n", "3", "--out", str(tmp_path / "k.csv"))
        assert code == 0 and json.loads(stdout)["algorithm"] == "alg5"


class TestCheck:
    def test_example3_auto(self, capsys):
        code, stdout, _ = run(capsys, "check", "--structure", "one-dep", "--p", "0.8,0.82,0.83", "--rho", "0.3,0.5")
        rep = json.loads(stdout)
        assert code == 0 and rep["verdict"] == "Feasible" and rep["checked_algorithm"] in ("alg3", "alg4")

    def test_hints(self, capsys):
        code, stdout, _ = run(capsys, "check", "--structure", "one-dep", "--p", "0.25,0.25,0.25,0.25", "--rho", "0.4")
        rep = json.loads(stdout)
        assert code == 2
        assert rep["hints"]["rho_max_alg3_equal"] == pytest.approx(1 / 3)
        assert "rho_max_alg4_equal" in rep["hints"]

    def test_identity(self, capsys):
        assert run(capsys, "check", "--structure", "general", "--p", "0.1,0.9,0.5")[0] == 0

    def test_not_positive_definite(self, capsys):
        code, stdout, _ = run(capsys, "check", "--structure", "general", "--p", "0.5,0.5,0.5",
                              "--rho-entry", "1,2,0.9", "--rho-entry", "1,3,0.9", "--rho-entry", "2,3,0")
        assert code == 2 and json.loads(stdout)["verdict"] == "NotPositiveDefinite"

    def test_full_precision_json(self, capsys):
        _, stdout, _ = run(capsys, "check", "--structure", "exchangeable", "--p", "0.1,0.4", "--rho", "0.9")
        v = json.loads(stdout)["violations"][0]["interval"][1]
        assert v == 0.408248290463863 or abs(v - (0.1 / 0.9 / (0.4 / 0.6)) ** 0.5) < 1e-16


class TestBounds:
    def test_alg3(self, capsys):
        _, stdout, _ = run(capsys, "bounds", "--structure", "one-dep", "--p", "0.25,0.25,0.25")
        assert json.loads(stdout)["rho_max_alg3_equal"] == pytest.approx(1 / 3, abs=1e-12)

    def test_alg4(self, capsys):
        _, stdout, _ = run(capsys, "bounds", "--structure", "one-dep", "--p", "0.3,0.3,0.3,0.3")
        assert json.loads(stdout)["rho_max_alg4_equal"] == pytest.approx((3 - 5**0.5) / 2, abs=1e-9)

    def test_pairwise(self, capsys, tmp_path):
        png = tmp_path / "r.png"
        _, stdout, _ = run(capsys, "bounds", "--p", "0.5,0.8", "--plot", str(png))
        d = json.loads(stdout)
        assert d["prentice_upper_min"] == pytest.approx(0.5) and d["prentice_upper"][0][1] == pytest.approx(0.5)
        assert png.stat().st_size > 0


class TestVerify:
    def test_example1(self, capsys, tmp_path):
        code, stdout, _ = run(capsys, "verify", *EX1, "--n", "100000", "--seeds", "3", "--out-dir", str(tmp_path), "--plot")
        assert code == 0
        lines = stdout.strip().splitlines()
        assert any(l.startswith("PASS") and "oracle-mean" in l for l in lines)
        assert not any(l.startswith("FAIL") for l in lines)
        rows = list(csv.reader(open(tmp_path / "verify_convergence.csv")))
        assert rows[0][0] == "n" and len(rows) == 4
        assert (tmp_path / "verify_convergence.png").exists()

    def test_small_n_skipped(self, capsys, tmp_path):
        code, stdout, _ = run(capsys, "verify", *EX1, "--n", "10", "--seeds", "2", "--out-dir", str(tmp_path))
        assert code == 0
        assert "SKIPPED decreasing" in stdout and "SKIPPED envelope" in stdout


class TestBench:
    def test_slope_report(self, capsys, tmp_path):
        out, png = tmp_path / "b.csv", tmp_path / "b.png"
        code, stdout, _ = run(capsys, "bench", "--alg", "1", "--dims", "1e3,1e4,1e5", "--reps", "3",
                              "--out", str(out), "--plot", str(png), "--expect-slope", "0.5,1.5")
        assert code == 0 and "PASS" in stdout
        assert len(list(csv.reader(open(out)))) == 4 and png.exists()

    def test_expect_slope_failure(self, capsys, tmp_path):
        code, _, _ = run(capsys, "bench", "--alg", "2", "--dims", "100,1000", "--reps", "2",
                         "--out", str(tmp_path / "b.csv"), "--expect-slope", "5,6")
        assert code == 3
