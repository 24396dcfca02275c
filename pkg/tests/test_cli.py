"""Command-line interface: exit codes, artifacts, config merge, replay."""

import json
import subprocess
import sys

import numpy as np
import pytest

import slelab.reversibility as rev
from slelab.cli import main, read_polygon_file, replay_manifest
from slelab.coupling import GRID_COLUMNS
from slelab.errors import ParameterError
from slelab.io_utils import (
    read_driver_csv,
    read_manifest,
    read_samples_csv,
    read_trace_csv,
    write_json,
)


def run(*args) -> int:
    return main([str(a) for a in args])


def manifest_of(out_dir) -> dict:
    return read_manifest(out_dir / "manifest.json")


class TestSimulate:
    def test_standard_writes_artifacts(self, tmp_path):
        code = run(
            "simulate", "--process", "standard", "--kappa", 2, "--t", 1,
            "--n", 200, "--seed", 7, "--out", tmp_path,
        )
        assert code == 0
        driver = read_driver_csv(tmp_path / "driver.csv")
        trace = read_trace_csv(tmp_path / "trace.csv")
        assert driver.n_steps == 200
        assert trace.points.size == 201
        doc = manifest_of(tmp_path)
        assert doc["command"] == "simulate"
        assert set(doc["files"]) == {"driver.csv", "trace.csv"}
        assert doc["master_seed"] == 7

    def test_same_command_twice_is_byte_identical(self, tmp_path):
        args = (
            "simulate", "--process", "standard", "--kappa", 2, "--t", 0.5,
            "--n", 100, "--seed", 3,
        )
        assert run(*args, "--out", tmp_path / "a") == 0
        assert run(*args, "--out", tmp_path / "b") == 0
        hashes_a = manifest_of(tmp_path / "a")["files"]
        hashes_b = manifest_of(tmp_path / "b")["files"]
        assert hashes_a == hashes_b

    def test_kappa_rho_records_force_column(self, tmp_path):
        code = run(
            "simulate", "--process", "kappa_rho", "--kappa", 2, "--rho", 1,
            "--force", "plus", "--t", 0.5, "--n", 100, "--out", tmp_path,
        )
        assert code == 0
        driver = read_driver_csv(tmp_path / "driver.csv")
        assert list(driver.forces) == ["p1"]
        assert np.all(driver.forces["p1"] >= driver.xi)

    def test_intermediate_records_both_forces(self, tmp_path):
        code = run(
            "simulate", "--process", "intermediate", "--kappa", 2,
            "--rho", 1, "--p1", "degenerate", "--p2", 1.0,
            "--t", 0.05, "--n", 100, "--out", tmp_path,
        )
        assert code == 0
        driver = read_driver_csv(tmp_path / "driver.csv")
        assert list(driver.forces) == ["p1", "p2"]

    def test_kappa_out_of_range_exits_2(self, tmp_path, capsys):
        code = run("simulate", "--kappa", 5, "--out", tmp_path)
        assert code == 2
        err = capsys.readouterr().err
        assert "kappa" in err and "(0, 4)" in err

    @pytest.mark.parametrize(
        "args",
        [
            ("--process", "standard", "--rho", 1),
            ("--process", "kappa_rho"),  # missing rho/force
            ("--process", "kappa_rho", "--rho", 1, "--force", 1, "--p2", 2),
            ("--process", "intermediate", "--rho", 1),  # missing p2
            ("--process", "intermediate", "--rho", 1, "--p2", 1, "--force", 2),
        ],
    )
    def test_flag_process_mismatches_exit_2(self, tmp_path, args):
        assert run("simulate", *args, "--out", tmp_path) == 2

    def test_unknown_process_rejected_by_parser(self, tmp_path):
        assert run("simulate", "--process", "turbo", "--out", tmp_path) == 2

    def test_replay_reproduces_hashes(self, tmp_path):
        src = tmp_path / "src"
        run(
            "simulate", "--process", "kappa_rho", "--kappa", 3, "--rho", 0.5,
            "--force", "minus", "--t", 0.25, "--n", 80, "--seed", 9,
            "--out", src,
        )
        new = replay_manifest(src / "manifest.json", tmp_path / "dst")
        assert new["files"] == manifest_of(src)["files"]


class TestHyp:
    def test_closed_form_row(self, capsys):
        assert run(
            "hyp", "--kappa", 2, "--rho", 1,
            "--x-min", 0.5, "--x-max", 0.5, "--x-count", 1,
        ) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "x,u0,f0,g0,v0,f0_bound_ok,g0_bound_ok"
        cells = lines[1].split(",")
        x, u, f, g, v = map(float, cells[:5])
        assert x == 0.5
        assert u == pytest.approx(1 - 0.5 / 3, rel=1e-12)
        assert f == pytest.approx((-1 / 3) / (1 - 0.5 / 3), rel=1e-12)
        assert g == pytest.approx(1 + 2 * 0.5 * f, rel=1e-12)
        assert v == pytest.approx(np.sqrt(0.5) * u, rel=1e-12)
        assert cells[5] == "true" and cells[6] == "true"

    def test_x_zero_row(self, capsys):
        assert run(
            "hyp", "--kappa", 3, "--rho", 0.5,
            "--x-min", 0, "--x-max", 0, "--x-count", 1,
        ) == 0
        cells = capsys.readouterr().out.strip().splitlines()[1].split(",")
        assert float(cells[1]) == 1.0          # kernel value at 0
        assert float(cells[3]) == pytest.approx(0.5, abs=1e-12)  # g0(0) = rho
        assert float(cells[4]) == 0.0          # v0 limit for rho > 0

    def test_bounds_hold_on_default_grid(self, capsys):
        assert run("hyp", "--kappa", 3.5, "--rho", 2) == 0
        lines = capsys.readouterr().out.strip().splitlines()[1:]
        assert len(lines) == 100
        for line in lines:
            cells = line.split(",")
            assert cells[5] == "true" and cells[6] == "true"

    def test_rho_below_bound_exits_2(self, capsys):
        assert run("hyp", "--kappa", 2, "--rho", -1.5) == 2
        assert "rho" in capsys.readouterr().err

    def test_bad_grid_exits_2(self):
        assert run("hyp", "--x-min", 0.5, "--x-max", 0.2) == 2
        assert run("hyp", "--x-count", 0) == 2
        assert run("hyp", "--x-max", 1.0) == 2

    def test_writes_no_files(self, tmp_path):
        assert run("hyp", "--out", tmp_path, "--x-count", 1) == 0
        assert list(tmp_path.iterdir()) == []


MC_ARGS = (
    "martingale", "--n-paths", 24, "--n-grid", 8, "--n-cells", 12,
    "--n-steps", 64, "--seed", 21,
)


class TestMartingale:
    def test_small_run_artifacts(self, tmp_path):
        assert run(*MC_ARGS, "--out", tmp_path) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["n_paths"] == 24
        assert report["passed"] is True
        assert abs(report["terminal_mean"] - 1.0) <= 3 * report["terminal_stderr"]
        grid_header = (tmp_path / "grid.csv").read_text().splitlines()[0]
        assert grid_header == ",".join(GRID_COLUMNS)
        assert (tmp_path / "mean_band.svg").read_text().startswith("<svg ")
        assert set(manifest_of(tmp_path)["files"]) == {
            "grid.csv", "report.json", "mean_band.svg",
        }

    def test_replay_reproduces_hashes(self, tmp_path):
        src, dst = tmp_path / "src", tmp_path / "dst"
        assert run(*MC_ARGS, "--out", src) == 0
        new = replay_manifest(src / "manifest.json", dst)
        assert new["files"] == manifest_of(src)["files"]

    def test_single_path_flagged_low_effective_n(self, tmp_path):
        assert run(
            "martingale", "--n-paths", 1, "--n-steps", 64, "--n-grid", 8,
            "--out", tmp_path,
        ) == 4
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["low_effective_n"] is True
        assert report["passed"] is False

    def test_overlapping_polygons_exit_2(self, tmp_path, capsys):
        poly = tmp_path / "hull.txt"
        poly.write_text("-2 0\n2 0\n2 3\n-2 3\n")
        code = run(
            "martingale", "--poly1", poly, "--poly2", poly,
            "--n-paths", 2, "--out", tmp_path / "out",
        )
        assert code == 2
        assert "disjoint" in capsys.readouterr().err

    def test_polygon_files_accepted(self, tmp_path):
        poly1 = tmp_path / "h1.txt"
        poly2 = tmp_path / "h2.txt"
        poly1.write_text("-0.1 0\n0.1 0\n0.1 0.1\n-0.1 0.1\n")
        poly2.write_text("0.9 0\n1.1 0\n1.1 0.1\n0.9 0.1\n")
        code = run(
            "martingale", "--poly1", poly1, "--poly2", poly2,
            "--n-paths", 8, "--n-grid", 4, "--n-cells", 6, "--n-steps", 32,
            "--out", tmp_path / "out",
        )
        assert code == 0

    def test_bad_grid_shape_exits_2_without_artifacts(self, tmp_path):
        out = tmp_path / "out"
        code = run(
            "martingale", "--n-paths", 4, "--n-grid", 128, "--n-steps", 64,
            "--out", out,
        )
        assert code == 2
        assert not out.exists() or list(out.iterdir()) == []


class TestReversibility:
    def test_degenerate_run_matches_library(self, tmp_path):
        code = run(
            "reversibility", "--test", "degenerate", "--kappa", 2,
            "--rho", 0, "--n-paths", 24, "--seed", 11, "--out", tmp_path,
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        expected = rev.test_reversal_degenerate(
            2.0, 0.0, n_paths=24, master_seed=11
        ).to_dict()
        assert report == expected
        samples = read_samples_csv(tmp_path / "samples.csv")
        assert len(samples) == report["n1"] + report["n2"]
        kinds = {s.kind for s in samples}
        assert kinds == {"first_crossing", "last_crossing"}
        assert (tmp_path / "cdf.svg").read_text().count("<polyline") == 2

    def test_generic_run(self, tmp_path):
        code = run(
            "reversibility", "--test", "generic", "--kappa", 2, "--rho", 1,
            "--b0", 1, "--r", 0.5, "--n-paths", 8, "--seed", 13,
            "--out", tmp_path,
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["test"] == "reversal_generic"
        radii = {s.radius for s in read_samples_csv(tmp_path / "samples.csv")}
        assert radii == {0.5, 2.0}

    def test_replay_reproduces_hashes(self, tmp_path):
        src, dst = tmp_path / "src", tmp_path / "dst"
        run(
            "reversibility", "--test", "degenerate", "--kappa", 2, "--rho", 0,
            "--n-paths", 8, "--seed", 2, "--out", src,
        )
        new = replay_manifest(src / "manifest.json", dst)
        assert new["files"] == manifest_of(src)["files"]

    def test_rho_below_bound_exits_2(self, tmp_path):
        assert run(
            "reversibility", "--kappa", 2, "--rho", -1.5, "--out", tmp_path,
        ) == 2


class TestTransience:
    def test_degenerate_report(self, tmp_path):
        code = run(
            "transience", "--kind", "degenerate", "--n-paths", 40,
            "--seed", 5, "--out", tmp_path,
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["strictly_increasing"] is True
        assert report["n_valid"] == 40
        assert set(manifest_of(tmp_path)["files"]) == {"report.json"}

    def test_replay_reproduces_hashes(self, tmp_path):
        src, dst = tmp_path / "src", tmp_path / "dst"
        run(
            "transience", "--kind", "intermediate", "--n-paths", 12,
            "--seed", 5, "--out", src,
        )
        new = replay_manifest(src / "manifest.json", dst)
        assert new["files"] == manifest_of(src)["files"]


class TestConfigFile:
    def test_config_supplies_defaults_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n-paths = 30\nkappa = 2.5\n# note\nrho = 0.5\n")
        out = tmp_path / "out"
        code = run(
            "transience", "--config", cfg, "--kappa", 3.0, "--n-paths", 12,
            "--seed", 9, "--out", out,
        )
        assert code == 0
        params = manifest_of(out)["params"]
        assert params["kappa"] == 3.0      # flag wins
        assert params["n_paths"] == 12     # flag wins
        assert params["rho"] == 0.5        # config applies

    def test_underscore_keys_accepted(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("x_count = 2\n")
        assert run("hyp", "--config", cfg) == 0

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("horizon = 1\n")
        assert run("transience", "--config", cfg, "--out", tmp_path) == 2
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_line_exits_2(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("kappa 2\n")
        assert run("transience", "--config", cfg, "--out", tmp_path) == 2

    def test_missing_file_exits_2(self, tmp_path):
        assert run(
            "transience", "--config", tmp_path / "nope.cfg", "--out", tmp_path,
        ) == 2

    def test_bad_value_type_exits_2(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n-paths = many\n")
        assert run("transience", "--config", cfg, "--out", tmp_path) == 2


class TestPolygonFile:
    def test_reads_vertices(self, tmp_path):
        path = tmp_path / "poly.txt"
        path.write_text("# hull\n-1 0\n1 0\n\n0 1.5\n")
        poly = read_polygon_file(path)
        assert poly.vertices.size == 3

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "poly.txt"
        path.write_text("-1 0\n1 0 3\n0 1\n")
        with pytest.raises(ParameterError, match="x y"):
            read_polygon_file(path)


class TestMainPlumbing:
    def test_no_arguments_exits_2(self):
        assert run() == 2

    def test_help_exits_0(self, capsys):
        assert run("--help") == 0
        assert "simulate" in capsys.readouterr().out

    def test_replay_unknown_command_rejected(self, tmp_path):
        path = write_json(
            tmp_path / "m.json",
            {"command": "warp", "params": {}, "files": {}},
        )
        with pytest.raises(ParameterError, match="unknown command"):
            replay_manifest(path, tmp_path / "out")

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [
                sys.executable, "-m", "slelab", "simulate",
                "--process", "standard", "--kappa", "2", "--t", "0.1",
                "--n", "20", "--seed", "1", "--out", str(tmp_path),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "manifest.json").exists()
