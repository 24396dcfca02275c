"""Artifact persistence: formatting, CSV/JSON round trips, manifests."""

import hashlib
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slelab.errors import ParameterError
from slelab.io_utils import (
    RunManifest,
    file_sha256,
    format_float,
    read_csv_columns,
    read_driver_csv,
    read_json,
    read_manifest,
    read_samples_csv,
    read_trace_csv,
    write_csv,
    write_driver_csv,
    write_json,
    write_samples_csv,
    write_text_atomic,
    write_trace_csv,
)
from slelab.loewner import DrivingPath, Trace
from slelab.reversibility import CrossingSample

finite_floats = st.floats(allow_nan=False, allow_infinity=False)


class TestFormatFloat:
    @given(finite_floats)
    def test_parse_is_exact_inverse(self, x):
        assert float(format_float(x)) == x

    @given(finite_floats)
    def test_parse_then_format_is_fixed_point(self, x):
        once = format_float(x)
        assert format_float(float(once)) == once

    def test_deterministic_fixed_width_exponent_form(self):
        assert format_float(1.0) == "1.0000000000000000e+00"
        assert format_float(-0.5) == "-5.0000000000000000e-01"
        assert format_float(1 / 3) == "3.3333333333333331e-01"


class TestAtomicWrite:
    def test_writes_and_replaces(self, tmp_path):
        target = tmp_path / "a.txt"
        write_text_atomic(target, "one\n")
        write_text_atomic(target, "two\n")
        assert target.read_text() == "two\n"

    def test_leaves_no_temp_files(self, tmp_path):
        write_text_atomic(tmp_path / "a.txt", "x")
        assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]

    def test_creates_parent_directories(self, tmp_path):
        target = tmp_path / "deep" / "nested" / "a.txt"
        write_text_atomic(target, "x")
        assert target.read_text() == "x"

    def test_world_readable(self, tmp_path):
        target = write_text_atomic(tmp_path / "a.txt", "x")
        assert target.stat().st_mode & 0o777 == 0o644


class TestCsv:
    def test_round_trip_preserves_strings(self, tmp_path):
        path = tmp_path / "t.csv"
        rows = [[1, 2.5, "label", True], [0, -1e-300, "x", False]]
        write_csv(path, ["a", "b", "c", "d"], rows)
        header, out = read_csv_columns(path)
        assert header == ["a", "b", "c", "d"]
        assert out[0] == ["1", format_float(2.5), "label", "True"]
        assert float(out[1][1]) == -1e-300

    def test_width_mismatch_rejected(self, tmp_path):
        with pytest.raises(ParameterError, match="width"):
            write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 2, 3]])

    def test_ragged_file_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(ParameterError, match="ragged"):
            read_csv_columns(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("")
        with pytest.raises(ParameterError, match="empty"):
            read_csv_columns(path)

    def test_byte_deterministic(self, tmp_path):
        rows = [[0.1 * k, np.sin(k)] for k in range(50)]
        p1 = write_csv(tmp_path / "a.csv", ["x", "y"], rows)
        p2 = write_csv(tmp_path / "b.csv", ["x", "y"], rows)
        assert p1.read_bytes() == p2.read_bytes()


class TestDriverTraceCsv:
    def test_driver_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        n = 40
        driver = DrivingPath(
            times=np.linspace(0.0, 1.0, n),
            xi=rng.standard_normal(n),
            forces={"p1": rng.standard_normal(n), "p2": rng.standard_normal(n)},
        )
        path = write_driver_csv(tmp_path / "d.csv", driver)
        assert path.read_text().splitlines()[0] == "t,xi,p1,p2"
        back = read_driver_csv(path)
        assert np.array_equal(back.times, driver.times)
        assert np.array_equal(back.xi, driver.xi)
        assert set(back.forces) == {"p1", "p2"}
        for name in ("p1", "p2"):
            assert np.array_equal(back.forces[name], driver.forces[name])

    def test_driver_header_validated(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("time,value\n0,1\n")
        with pytest.raises(ParameterError, match="t,xi"):
            read_driver_csv(path)

    def test_trace_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        n = 30
        trace = Trace(
            times=np.linspace(0.0, 0.5, n),
            points=rng.standard_normal(n) + 1j * rng.uniform(0, 1, n),
        )
        back = read_trace_csv(write_trace_csv(tmp_path / "t.csv", trace))
        assert np.array_equal(back.times, trace.times)
        assert np.array_equal(back.points, trace.points)

    def test_trace_header_validated(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("t,x,y\n0,1,2\n")
        with pytest.raises(ParameterError, match="t,re,im"):
            read_trace_csv(path)


class TestSamplesCsv:
    def test_round_trip_exact(self, tmp_path):
        samples = [
            CrossingSample(0, 1.0, "first_crossing", 1.25),
            CrossingSample(3, 2.0, "last_crossing", 0.5),
        ]
        back = read_samples_csv(write_samples_csv(tmp_path / "s.csv", samples))
        assert back == samples

    def test_header_validated(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("id,r,kind,theta\n0,1,first_crossing,1\n")
        with pytest.raises(ParameterError, match="header"):
            read_samples_csv(path)


class TestJson:
    def test_numpy_types_coerced(self, tmp_path):
        doc = {
            "arr": np.arange(3, dtype=np.int64),
            "x": np.float64(0.5),
            "flag": np.bool_(True),
            "nested": [np.float64(1.0), {"k": np.int32(2)}],
        }
        path = write_json(tmp_path / "d.json", doc)
        back = json.loads(path.read_text())
        assert back == {
            "arr": [0, 1, 2], "x": 0.5, "flag": True,
            "nested": [1.0, {"k": 2}],
        }

    def test_sorted_keys_and_trailing_newline(self, tmp_path):
        path = write_json(tmp_path / "d.json", {"b": 1, "a": 2})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_byte_deterministic_regardless_of_insertion_order(self, tmp_path):
        p1 = write_json(tmp_path / "1.json", {"b": 1, "a": [2, 3]})
        p2 = write_json(tmp_path / "2.json", {"a": [2, 3], "b": 1})
        assert p1.read_bytes() == p2.read_bytes()


class TestManifest:
    def test_sha256_matches_hashlib(self, tmp_path):
        path = tmp_path / "f.bin"
        path.write_bytes(b"abc")
        assert file_sha256(path) == hashlib.sha256(b"abc").hexdigest()

    def test_record_write_read_round_trip(self, tmp_path):
        out = tmp_path / "out.csv"
        out.write_text("t,xi\n0,0\n")
        manifest = RunManifest(
            command="simulate", params={"kappa": 2.0}, master_seed=7
        )
        manifest.record(out)
        doc = read_manifest(manifest.write(tmp_path / "manifest.json"))
        assert doc["command"] == "simulate"
        assert doc["params"] == {"kappa": 2.0}
        assert doc["master_seed"] == 7
        assert doc["files"] == {"out.csv": file_sha256(out)}
        assert doc["started"] and doc["finished"]
        assert doc["version"]

    def test_missing_keys_rejected(self, tmp_path):
        path = write_json(tmp_path / "m.json", {"command": "simulate"})
        with pytest.raises(ParameterError, match="missing"):
            read_manifest(path)


class TestRead12SigDigits:
    def test_formatted_values_survive_12_digit_comparison(self, tmp_path):
        values = [np.pi, 2 / 3, 1e-7, 123456.789]
        path = write_csv(tmp_path / "v.csv", ["v"], [[v] for v in values])
        _, rows = read_csv_columns(path)
        for v, row in zip(values, rows):
            assert float(row[0]) == pytest.approx(v, rel=1e-12, abs=0.0)
            assert float(row[0]) == v
