import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from shortcodes import cli
from shortcodes import codebook as cb
from shortcodes import simkit as sk


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParsing:
    def test_grid(self):
        assert cli.parse_grid("0.40:0.02:0.48") == [0.4, 0.42, 0.44, 0.46, 0.48]
        assert cli.parse_grid("1,2.5,3") == [1.0, 2.5, 3.0]
        for bad in ("1:0:2", "2:1:1", "a,b"):
            with pytest.raises(cli.UsageError):
                cli.parse_grid(bad)

    def test_rate(self):
        assert cli.parse_rate("115/256") == 115 / 256
        assert cli.parse_rate("0.5") == 0.5
        with pytest.raises(cli.UsageError):
            cli.parse_rate("1/0")


class TestConstruct:
    def test_bch(self, tmp_path, capsys):
        out = tmp_path / "bch.code"
        assert run("construct", "bch", "--m", 8, "--t", 18, "--extend", "--out", out) == 0
        C = cb.load_code(out)
        assert (C.n, C.k) == (256, 131)
        assert "n=256 k=131" in capsys.readouterr().out

    def test_rm(self, tmp_path):
        out = tmp_path / "rm.code"
        assert run("construct", "rm", "--ell", 8, "--k", 128, "--out", out) == 0
        assert (cb.load_code(out).n, cb.load_code(out).k) == (256, 128)

    def test_ldpc_deterministic(self, tmp_path):
        a, b = tmp_path / "a.code", tmp_path / "b.code"
        assert run("construct", "ldpc", "--n", 256, "--seed", 7, "--out", a) == 0
        assert run("construct", "ldpc", "--n", 256, "--seed", 7, "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_polar_and_crc(self, tmp_path):
        out = tmp_path / "p.code"
        assert run("construct", "polar", "--ell", 6, "--k", 32, "--design", 0.4, "--crc", "ccitt16", "--out", out) == 0
        C = cb.load_code(out)
        assert C.k == 16 and C.meta["crc"] == "ccitt16"

    @pytest.mark.parametrize(
        "argv",
        [
            ["construct", "bch", "--m", 8],
            ["construct", "bch", "--m", 4, "--t", 8],
            ["construct", "hamming"],
            ["construct", "rm", "--ell", 3, "--k", 4, "--crc", "crc99"],
            ["frobnicate"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run(*argv) == cli.EXIT_USAGE
        assert "usage error" in capsys.readouterr().err


class TestSimulate:
    def test_flags_and_sidecar(self, tmp_path, capsys):
        code = tmp_path / "h.code"
        cb.save_code(cb.extend_code(cb.build_bch(5, 2)), code)
        out = tmp_path / "r.csv"
        rc = run("simulate", "--code", code, "--channel", "bec", "--grid", "0.3:0.1:0.5", "--target-errors", 20, "--seed", 3, "--out", out)
        assert rc == 0
        rows = read_csv(out)
        assert [float(r["param"]) for r in rows] == [0.3, 0.4, 0.5]
        meta = json.loads(sk.metadata_path(out).read_text())
        assert meta["seed"] == 3 and meta["channel"] == "bec"
        assert meta["effective_config"]["channel"]["grid"] == "0.3:0.1:0.5"

    def test_deterministic(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[code]\nfamily = rm\nell = 5\nk = 16\n\n[channel]\nkind = awgn\ngrid = 1,2\n\n"
            "[decoder]\nkind = osd\norder = 2\n\n[run]\ntarget_errors = 15\nseed = 4\n"
        )
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run("simulate", cfg, "--out", a) == 0
        assert run("simulate", cfg, "--out", b, "--jobs", 2) == 0
        strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
        assert strip(read_csv(a)) == strip(read_csv(b))

    def test_set_override(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[code]\nfamily = rm\nell = 4\nk = 5\n[channel]\nkind = bec\ngrid = 0.3\n[run]\ntarget_errors = 5\n")
        out = tmp_path / "o.csv"
        assert run("simulate", cfg, "--set", "channel.grid=0.4,0.5", "--out", out) == 0
        assert len(read_csv(out)) == 2

    def test_crc_rate_reported(self, tmp_path, capsys):
        code = tmp_path / "bch.code"
        cb.save_code(cb.extend_code(cb.build_bch(8, 18)), code)
        out = tmp_path / "c.csv"
        rc = run("simulate", "--code", code, "--crc", "ccitt16", "--channel", "bec", "--grid", "0.6", "--target-errors", 3, "--out", out)
        assert rc == 0
        assert "115/256" in capsys.readouterr().out
        assert json.loads(sk.metadata_path(out).read_text())["k"] == 115

    def test_awgn_uses_outer_rate(self, tmp_path):
        cfg = tmp_path / "p.ini"
        cfg.write_text("[code]\nfamily = polar\nell = 6\nk = 32\ncrc = ccitt16\n[channel]\nkind = awgn\ngrid = 2\n[run]\ntarget_errors = 3\n")
        out = tmp_path / "p.csv"
        assert run("simulate", cfg, "--out", out) == 0
        meta = json.loads(sk.metadata_path(out).read_text())
        assert meta["k"] == 16 and meta["polar_rebuild"]
        assert meta["rate"] == 16 / 64

    def test_budget_exit(self, tmp_path):
        code = tmp_path / "h.code"
        cb.save_code(cb.hamming_7_4(), code)
        rc = run("simulate", "--code", code, "--channel", "bec", "--grid", "0.01", "--max-trials", 50, "--out", tmp_path / "b.csv")
        assert rc == cli.EXIT_BUDGET
        assert read_csv(tmp_path / "b.csv")[0]["partial"] == "1"

    @pytest.mark.parametrize(
        "ini",
        [
            "[code]\nfamily = rm\nell = 3\nk = 4\ncolour = red\n[channel]\nkind = bec\ngrid = 0.3\n",
            "[mystery]\nx = 1\n",
            "[code]\nfamily = rm\nell = 3\nk = 4\n[channel]\nkind = bsc\ngrid = 0.3\n",
            "[code]\nfamily = rm\nell = 3\nk = 4\n[channel]\nkind = bec\n",
            "[code]\nfamily = rm\nell = 3\nk = 4\n[channel]\nkind = bec\ngrid = 0.3\n[decoder]\nkind = osd\n",
        ],
    )
    def test_rejects_bad_config(self, tmp_path, ini):
        cfg = tmp_path / "bad.ini"
        cfg.write_text(ini)
        assert run("simulate", cfg, "--out", tmp_path / "x.csv") == cli.EXIT_USAGE

    def test_missing_code(self, tmp_path):
        assert run("simulate", "--channel", "bec", "--grid", "0.3") == cli.EXIT_USAGE
        assert run("simulate", "--code", tmp_path / "none.code", "--channel", "bec", "--grid", "0.3") == cli.EXIT_USAGE

    def test_unwritable_output_is_runtime_error(self, tmp_path):
        code = tmp_path / "h.code"
        cb.save_code(cb.hamming_7_4(), code)
        rc = run("simulate", "--code", code, "--channel", "bec", "--grid", "0.5", "--target-errors", 2, "--out", tmp_path / "no" / "x.csv")
        assert rc == cli.EXIT_RUNTIME


class TestBounds:
    def test_ppv_stdout(self, capsys):
        assert run("bounds", "ppv", "--n", 256, "--R", 0.5, "--eps", 0.5) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "channel_param,p_ew"
        assert float(lines[1].split(",")[1]) == 0.5

    def test_shannon_decreasing(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("bounds", "shannon", "--n", 256, "--R", 0.5, "--ebn0", "0:0.1:5", "--out", out) == 0
        p = [float(r["p_ew"]) for r in read_csv(out)]
        # the 0 dB point is clamped to 1; strictly decreasing afterwards
        assert np.all(np.diff(p[1:]) < 0) and p[0] >= p[1]
        meta = json.loads(sk.metadata_path(out).read_text())
        assert meta["channel"] == "awgn" and "Shannon" in meta["bound"]

    def test_invalid_points(self, capsys):
        assert run("bounds", "ppv", "--n", 256, "--R", 0.5, "--eps", 0) == cli.EXIT_USAGE
        assert run("bounds", "ppv", "--n", 256, "--R", 0.5) == cli.EXIT_USAGE
        assert run("bounds", "shannon", "--n", 256, "--R", 0.5, "--ebn0=-3,2") == 0
        assert "skipping -3 dB" in capsys.readouterr().err


class TestPlotdata:
    def sims(self, tmp_path):
        paths = []
        for fam, args in (("rm", ["--ell", 4, "--k", 5]), ("bch", ["--m", 4, "--t", 1, "--extend"])):
            code = tmp_path / f"{fam}.code"
            run("construct", fam, *args, "--out", code)
            out = tmp_path / f"{fam}.csv"
            run("simulate", "--code", code, "--channel", "bec", "--grid", "0.3,0.5", "--target-errors", 10, "--out", out)
            paths.append(out)
        return paths

    def test_merge_and_figure(self, tmp_path):
        sims = self.sims(tmp_path)
        bnd = tmp_path / "ppv.csv"
        run("bounds", "ppv", "--n", 16, "--R", "5/16", "--eps", "0.3:0.05:0.5", "--out", bnd)
        out, fig = tmp_path / "merged.csv", tmp_path / "fig.png"
        assert run("plotdata", *sims, "--bounds", bnd, "--out", out, "--figure", fig) == 0
        rows = read_csv(out)
        assert list(rows[0]) == cli.MERGED_COLUMNS
        keys = [(r["series"], float(r["param"])) for r in rows]
        assert keys == sorted(keys)
        assert {r["kind"] for r in rows} == {"sim", "bound"}
        assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_mixed_channels_rejected(self, tmp_path):
        sims = self.sims(tmp_path)
        bnd = tmp_path / "sh.csv"
        run("bounds", "shannon", "--n", 16, "--R", 0.5, "--ebn0", "2,3", "--out", bnd)
        assert run("plotdata", *sims, "--bounds", bnd, "--out", tmp_path / "m.csv") == cli.EXIT_USAGE

    def test_missing_sidecar(self, tmp_path):
        bnd = tmp_path / "b.csv"
        bnd.write_text("channel_param,p_ew\n0.4,0.1\n")
        assert run("plotdata", "--bounds", bnd, "--out", tmp_path / "m.csv") == cli.EXIT_USAGE


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "shortcodes.cli", "bounds", "ppv", "--n", "256", "--R", "0.5", "--eps", "0.45"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert abs(float(proc.stdout.splitlines()[1].split(",")[1]) - 0.0539) < 5e-4
