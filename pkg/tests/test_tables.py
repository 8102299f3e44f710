import os

import numpy as np
import pytest

from pairpol import tables
from pairpol.coincidence import FilterSpec, simulate_counts
from pairpol.errors import InputError
from pairpol.jones import single_protocol_settings, two_protocol_settings
from pairpol.linalg import DensityMatrix
from pairpol.metrics import report_for
from pairpol.spectroscopy import CalibrationCurve, Spectrum, TimeHistogram

from test_source import make_spec


@pytest.fixture
def records():
    return simulate_counts(
        make_spec(), single_protocol_settings(), [FilterSpec.longpass(1550.0, "arm1")],
        integration_s=1.0, seed=5,
    )


class TestRecordTable:
    def test_roundtrip(self, records):
        text = tables.format_records(records)
        again = tables.parse_records(text)
        assert again == records

    def test_two_photon_roundtrip(self):
        records = simulate_counts(make_spec(), two_protocol_settings(), [], 1.0, seed=6)
        assert tables.parse_records(tables.format_records(records)) == records

    def test_format_is_deterministic(self, records):
        assert tables.format_records(records) == tables.format_records(records)

    def test_empty_arm_columns(self, records):
        line = tables.format_records(records).splitlines()[1]
        fields = line.split(",")
        assert fields[1] == "" and fields[2] == ""  # arm 1 unset in heralded records
        assert fields[3] != ""

    def test_malformed_row_names_line(self, records):
        text = tables.format_records(records)
        lines = text.splitlines()
        lines[3] = lines[3].replace(lines[3].split(",")[6], "not_a_number")
        with pytest.raises(InputError, match="line 4"):
            tables.parse_records("\n".join(lines))

    def test_wrong_field_count_names_line(self, records):
        text = tables.format_records(records)
        lines = text.splitlines()
        lines[2] += ",0"
        with pytest.raises(InputError, match="line 3"):
            tables.parse_records("\n".join(lines))

    def test_bad_header_rejected(self):
        with pytest.raises(InputError, match="header"):
            tables.parse_records("a,b,c\n1,2,3\n")

    def test_empty_rejected(self):
        with pytest.raises(InputError, match="empty"):
            tables.parse_records("")

    def test_file_roundtrip(self, records, tmp_path):
        path = tmp_path / "counts.csv"
        tables.write_records(path, records)
        assert tables.read_records(path) == records


class TestJsonObjects:
    def test_density_matrix_roundtrip(self, tmp_path):
        rho = DensityMatrix.from_state([1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])
        path = tmp_path / "rho.json"
        tables.write_density_matrix(path, rho)
        again = tables.read_density_matrix(path)
        assert np.allclose(again.matrix, rho.matrix, atol=1e-15)

    def test_density_matrix_write_is_deterministic(self, tmp_path):
        rho = DensityMatrix(np.diag([0.887, 0.113]).astype(complex))
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        tables.write_density_matrix(a, rho)
        tables.write_density_matrix(b, rho)
        assert a.read_bytes() == b.read_bytes()

    def test_source_spec_roundtrip(self, tmp_path):
        spec = make_spec()
        path = tmp_path / "src.spec"
        tables.write_source_spec(path, spec)
        assert tables.read_source_spec(path) == spec

    def test_curve_roundtrip(self, tmp_path):
        curve = CalibrationCurve(coefficients=(1450.0, 20.0, 0.1), domain=(0.0, 9.0))
        path = tmp_path / "curve.json"
        tables.write_calibration_curve(path, curve)
        assert tables.read_calibration_curve(path).coefficients == curve.coefficients

    def test_metrics_report_written(self, tmp_path):
        rho = DensityMatrix(np.diag([0.887, 0.113]).astype(complex))
        path = tmp_path / "report.json"
        tables.write_metrics_report(path, report_for(rho), extra={"diagnostics": {"ok": True}})
        import json

        data = json.loads(path.read_text())
        assert data["purity"] == pytest.approx(0.799538)
        assert data["diagnostics"] == {"ok": True}

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InputError, match="malformed"):
            tables.read_density_matrix(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(InputError, match="cannot read"):
            tables.read_records(tmp_path / "missing.csv")


class TestBinnedText:
    def test_histogram_roundtrip(self):
        hist = TimeHistogram(bin_edges_ns=(0.0, 0.05, 0.1), counts=(3, 9), n_dropped=2)
        text = tables.format_histogram(hist)
        again = tables.parse_histogram(text)
        assert again == hist

    def test_empty_histogram_roundtrip(self):
        hist = TimeHistogram((), (), n_dropped=5)
        assert tables.parse_histogram(tables.format_histogram(hist)) == hist

    def test_spectrum_roundtrip(self):
        s = Spectrum(bin_edges_nm=(1500.0, 1501.0, 1502.0), counts=(4, 6))
        assert tables.parse_spectrum(tables.format_spectrum(s)) == s

    def test_missing_closing_edge_rejected(self):
        with pytest.raises(InputError, match="closing"):
            tables.parse_spectrum("wavelength_nm\tcount\n1500.0\t4\n")

    def test_calibration_points_parsing(self):
        text = "# delay wavelength\n0.0\t1500.0\n1.0, 1520.0\n2.0 1541.0\n"
        pts = tables.parse_calibration_points(text)
        assert pts == [(0.0, 1500.0), (1.0, 1520.0), (2.0, 1541.0)]

    def test_calibration_points_errors_name_line(self):
        with pytest.raises(InputError, match="line 2"):
            tables.parse_calibration_points("0.0\t1500.0\nbad line here\n")


class TestFilterTokens:
    def test_longpass(self):
        f = tables.parse_filter_token("lp1550:arm1")
        assert f == FilterSpec.longpass(1550.0, "arm1")

    def test_bandpass_default_placement(self):
        f = tables.parse_filter_token("bp1475/50")
        assert f == FilterSpec.bandpass(1475.0, 50.0, "before_splitter")

    def test_before_alias(self):
        assert tables.parse_filter_token("lp1250:before").placement == "before_splitter"

    def test_filter_list(self):
        fs = tables.parse_filters("lp1250,lp1400,lp1550:arm1")
        assert len(fs) == 3
        assert tables.parse_filters("") == []

    def test_malformed(self):
        with pytest.raises(InputError, match="malformed filter"):
            tables.parse_filter_token("xp1550")
        with pytest.raises(InputError, match="malformed filter"):
            tables.parse_filter_token("bp1475")


class TestAtomicWrite:
    def test_no_temp_files_left(self, tmp_path):
        path = tmp_path / "out.txt"
        tables.atomic_write_text(path, "hello\n")
        assert path.read_text() == "hello\n"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]

    def test_overwrite_atomic(self, tmp_path):
        path = tmp_path / "out.txt"
        tables.atomic_write_text(path, "one\n")
        tables.atomic_write_text(path, "two\n")
        assert path.read_text() == "two\n"
