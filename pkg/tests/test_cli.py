import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecapacity.bsc_oracle import bsc_sphere_packing_of_E
from ecapacity.cli import InputError, emit_channel, main, parse_channel, parse_codebook
from ecapacity.prob_core import Channel


@pytest.fixture
def files(tmp_path):
    bsc = tmp_path / "bsc.json"
    bsc.write_text(emit_channel([[0.9, 0.1], [0.1, 0.9]], name="bsc"))
    ident = tmp_path / "id.csv"
    ident.write_text("1,0,0\n0,1,0\n0,0,1\n")
    same = tmp_path / "same.csv"
    same.write_text("0.3,0.7\n0.3,0.7\n")
    book = tmp_path / "book.txt"
    book.write_text("0000\n1111\n")
    return {"bsc": bsc, "id": ident, "same": same, "book": book, "dir": tmp_path}


def report(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines() if ": " in line)


def read_curve(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "E,R"
    return np.array([[float(t) for t in ln.split(",")] for ln in lines[1:]])


class TestChannelFiles:
    def test_round_trip_bit_exact(self):
        w = Channel([[0.1, 0.2, 0.7], [1 / 3, 1 / 3, 1 - 2 / 3]])
        back, name = parse_channel(emit_channel(w, name="x"))
        assert back == w and name == "x"

    @settings(max_examples=50)
    @given(st.integers(1, 4), st.integers(1, 4), st.data())
    def test_round_trip_property(self, kx, ky, data):
        rows = [data.draw(st.lists(st.floats(0.001, 1.0), min_size=ky, max_size=ky)) for _ in range(kx)]
        w = Channel([np.array(r) / sum(r) for r in rows])
        assert parse_channel(emit_channel(w))[0] == w

    def test_csv_rows(self):
        w, name = parse_channel("0.5,0.5\n# comment\n0.25,0.75\n")
        assert w.input_size == 2 and name is None

    def test_diagnostics(self):
        with pytest.raises(InputError, match="line 2, field 2"):
            parse_channel("0.5,0.5\n0.5,abc\n")
        with pytest.raises(InputError, match="line 1"):
            parse_channel('{"rows": [[1.0,]]')
        with pytest.raises(InputError, match="rows\\[1\\]"):
            parse_channel('{"input_size": 2, "output_size": 2, "rows": [[1, 0], [1]]}')
        with pytest.raises(InputError, match="row 1"):
            parse_channel("0.5,0.5\n0.6,0.5\n")

    def test_codebook_formats(self):
        assert parse_codebook("01\n10\n").words == ((0, 1), (1, 0))
        assert parse_codebook("0 2 1\n1,1,0\n").words == ((0, 2, 1), (1, 1, 0))
        assert parse_codebook('{"words": ["011", [1, 0, 0]]}').M == 2
        with pytest.raises(InputError):
            parse_codebook("0x1\n")


class TestCommands:
    def test_capacity(self, files, capsys):
        assert main(["capacity", "--channel", str(files["bsc"])]) == 0
        out = report(capsys.readouterr().out)
        assert float(out["capacity_bits"]) == pytest.approx(0.531004, abs=1e-6)
        assert main(["capacity", "--channel", str(files["id"])]) == 0
        assert float(report(capsys.readouterr().out)["capacity_bits"]) == pytest.approx(1.584963, abs=1e-6)

    def test_bad_row_sum_exits_2(self, files, capsys):
        bad = files["dir"] / "bad.csv"
        bad.write_text("0.9,0.2\n0.1,0.9\n")
        assert main(["capacity", "--channel", str(bad)]) == 2
        assert "row 0" in capsys.readouterr().err

    def test_missing_file_exits_2(self, files):
        assert main(["capacity", "--channel", str(files["dir"] / "nope.json")]) == 2

    def test_curve_csv_and_sidecar(self, files):
        out = files["dir"] / "sp.csv"
        code = main(["curve", "--channel", str(files["bsc"]), "--kind", "sp",
                     "--emin", "0", "--emax", "0.7", "--epoints", "8", "--out", str(out)])
        assert code == 0
        data = read_curve(out)
        assert data.shape == (8, 2)
        for e, r in data:
            assert r == pytest.approx(bsc_sphere_packing_of_E(e, 0.1), abs=1e-6)
        for ln in out.read_text().splitlines()[1:]:
            e, r = ln.split(",")
            assert float(e) == float(f"{float(e):.17g}")
        meta = json.loads((files["dir"] / "sp.csv.meta.json").read_text())
        assert meta["grid"] == {"min": 0.0, "max": 0.7, "count": 8}
        assert meta["failures"] == [] and len(meta["channel"]["digest"]) == 64
        assert "inner_tolerance" in meta["config"] and meta["version"]

    def test_curve_default_grid_and_json(self, files):
        out = files["dir"] / "ex.json"
        assert main(["curve", "--channel", str(files["same"]), "--kind", "ex",
                     "--epoints", "3", "--format", "json", "--out", str(out)]) == 0
        pts = json.loads(out.read_text())
        assert [p["R"] for p in pts] == [0.0, 0.0, 0.0]

    def test_curve_single_zero_point(self, files, capsys):
        assert main(["curve", "--channel", str(files["bsc"]), "--egrid", "0"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "E,R"
        assert float(lines[1].split(",")[1]) == pytest.approx(0.531004, abs=1e-6)

    def test_curve_rc_equals_sp_below_critical(self, files):
        a, b = files["dir"] / "a.csv", files["dir"] / "b.csv"
        grid = "0,0.03,0.06,0.09,0.12"
        main(["curve", "--channel", str(files["bsc"]), "--kind", "sp", "--egrid", grid, "--out", str(a)])
        main(["curve", "--channel", str(files["bsc"]), "--kind", "rc", "--egrid", grid, "--out", str(b)])
        assert np.allclose(read_curve(a), read_curve(b), atol=1e-6)

    def test_curve_bad_grid(self, files):
        assert main(["curve", "--channel", str(files["bsc"]), "--egrid", "0.2,0.1"]) == 2
        assert main(["curve", "--channel", str(files["bsc"]), "--emin", "0.3", "--emax", "0.1"]) == 2

    def test_curve_solver_failure_exits_3(self, files):
        out = files["dir"] / "f.csv"
        code = main(["curve", "--channel", str(files["bsc"]), "--egrid", "0.1,0.2",
                     "--tol", "1e-300", "--out", str(out)])
        assert code == 3
        meta = json.loads((files["dir"] / "f.csv.meta.json").read_text())
        assert [f["index"] for f in meta["failures"]] == [0, 1]
        assert all(math.isnan(r) for r in read_curve(out)[:, 1])

    def test_ecrit(self, files, capsys):
        assert main(["ecrit", "--channel", str(files["bsc"])]) == 0
        out = report(capsys.readouterr().out)
        assert float(out["critical_reliability"]) == pytest.approx(0.133206, abs=1e-5)
        assert float(out["sphere_packing_rate"]) == pytest.approx(0.188722, abs=1e-5)
        assert main(["ecrit", "--channel", str(files["same"])]) == 0
        assert float(report(capsys.readouterr().out)["critical_reliability"]) == 0.0
        assert main(["ecrit", "--channel", str(files["id"])]) == 0
        assert "note" in report(capsys.readouterr().out)

    def test_types_verify(self, capsys):
        assert main(["types-verify", "--N", "1", "--kx", "2"]) == 0
        assert main(["types-verify", "--N", "8", "--kx", "2", "--ky", "3", "--instances", "50"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_types_verify_oversized_is_skipped(self, capsys):
        assert main(["types-verify", "--N", "60", "--kx", "8", "--instances", "5"]) == 0
        assert "SKIP" in capsys.readouterr().out

    def test_simulate(self, files, capsys):
        assert main(["simulate", "--channel", str(files["bsc"]), "--codebook", str(files["book"])]) == 0
        out = report(capsys.readouterr().out)
        assert out["method"] == "exhaustive"
        assert float(out["max_error"]) == pytest.approx(0.0523, abs=1e-12)
        idbook = files["dir"] / "idbook.txt"
        idbook.write_text("012\n210\n")
        assert main(["simulate", "--channel", str(files["id"]), "--codebook", str(idbook)]) == 0
        assert float(report(capsys.readouterr().out)["avg_error"]) == 0.0

    def test_simulate_monte_carlo(self, files, capsys):
        long = files["dir"] / "long.txt"
        long.write_text("0" * 24 + "\n" + "1" * 24 + "\n")
        args = ["simulate", "--channel", str(files["bsc"]), "--codebook", str(long),
                "--trials", "2000", "--seed", "5"]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert report(first)["method"] == "monte-carlo" and "half_width_95" in first
        main(args)
        assert capsys.readouterr().out == first

    def test_simulate_alphabet_mismatch(self, files):
        bad = files["dir"] / "bad.txt"
        bad.write_text("0120\n1111\n")
        assert main(["simulate", "--channel", str(files["bsc"]), "--codebook", str(bad)]) == 2
