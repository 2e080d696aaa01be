import logging
from pathlib import Path

import numpy as np
import pytest

from onfcavity import GratingDesign, Spectrum, simulate_spectrum
from onfcavity.errors import (EmptyFile, NonMonotonicGrid, ParseError, UnknownKey,
                              ValidationError)
from onfcavity.files import (format_design, load_design, load_points, load_spectrum,
                             parse_design, quantity, read_json, save_design, sig6,
                             write_spectrum)

DATA = Path(__file__).parent / "data"


class TestDesignDocument:
    def test_fixture(self):
        d = load_design(DATA / "reference.conf")
        assert d.slat_width == pytest.approx(50.4)
        assert (d.n_in_slats, d.n_out_slats) == (120, 270)
        assert d.bragg_wavelength() == pytest.approx(640.0)
        assert d.y_loss_multiplier == 1.25

    def test_minimal_document(self):
        d = parse_design("period=252\nduty_cycle=0.2\nn_in_slats=120\nn_out_slats=270\n")
        assert d.slat_width == pytest.approx(50.4)

    def test_bad_duty_cycle_names_field(self):
        with pytest.raises(ValidationError) as info:
            parse_design("period = 252\nduty_cycle = 1.5\n", "d.conf")
        assert info.value.key == "duty_cycle" and info.value.line == 2
        assert "duty_cycle" in str(info.value) and "d.conf:line 2" in str(info.value)

    def test_misspelled_key(self):
        with pytest.raises(UnknownKey) as info:
            parse_design("# header\nperoid = 252\n", "d.conf")
        assert info.value.line == 2 and "peroid" in str(info.value)

    @pytest.mark.parametrize("text,line", [
        ("period 252\n", 1),
        ("period = abc\n", 1),
        ("period = 252\nperiod = 253\n", 2),
        ("[z]\n", 1),
        ("[y\n", 1),
    ])
    def test_syntax_errors(self, text, line):
        with pytest.raises((ParseError, UnknownKey)) as info:
            parse_design(text)
        assert info.value.line == line

    def test_schema_version(self):
        with pytest.raises(ValidationError):
            parse_design("schema_version = 2\n")

    def test_integer_slat_counts(self):
        with pytest.raises(ValidationError):
            parse_design("n_in_slats = 120.5\n")

    def test_round_trip(self, tmp_path):
        design = GratingDesign(n_in_slats=133, chirp_rate=0.013, defect_width=380.5)
        save_design(design, tmp_path / "d.conf")
        assert load_design(tmp_path / "d.conf") == design
        assert parse_design(format_design(GratingDesign())) == GratingDesign()


class TestSpectrumFile:
    def test_two_columns(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("wavelength_nm,reflectivity\n600,0.1\n600.5,0.2\n601,0.3\n")
        s = load_spectrum(path)
        assert len(s) == 3 and s.transmittance is None

    def test_round_trip_exact(self, tmp_path, reference_design):
        s = simulate_spectrum(reference_design, points=801)
        write_spectrum(s, tmp_path / "s.csv")
        back = load_spectrum(tmp_path / "s.csv")
        assert np.array_equal(back.wavelength, s.wavelength)
        assert np.array_equal(back.reflectivity, s.reflectivity)
        assert np.array_equal(back.transmittance, s.transmittance)

    def test_duplicate_row(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("wavelength_nm,reflectivity\n600,0.1\n600.5,0.2\n600.5,0.3\n")
        with pytest.raises(NonMonotonicGrid) as info:
            load_spectrum(path)
        assert info.value.line == 4 and str(path) in str(info.value)

    def test_over_range_fixture(self, caplog):
        with caplog.at_level(logging.WARNING):
            s = load_spectrum(DATA / "overrange.csv")
        assert s.metadata["clipped"] == 2
        assert s.reflectivity.max() == 1.0 and len(s) == 11
        assert "clipped" in caplog.text

    def test_out_of_tolerance(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("wavelength_nm,reflectivity\n600,0.1\n601,1.2\n")
        with pytest.raises(ValidationError) as info:
            load_spectrum(path)
        assert info.value.line == 3

    @pytest.mark.parametrize("text,error", [
        ("", EmptyFile),
        ("wavelength_nm,reflectivity\n", EmptyFile),
        ("lambda,R\n600,0.1\n", ParseError),
        ("wavelength_nm,reflectivity\n600,0.1,0.2\n", ParseError),
        ("wavelength_nm,reflectivity\n600,x\n", ParseError),
    ])
    def test_malformed(self, tmp_path, text, error):
        path = tmp_path / "s.csv"
        path.write_text(text)
        with pytest.raises(error):
            load_spectrum(path)


class TestPointsFile:
    def test_weights_optional(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("kappa_ghz,r0\n405,0.595\n122,0.095\n")
        points, weights = load_points(path)
        assert points == [(405.0, 0.595), (122.0, 0.095)] and weights is None
        path.write_text("kappa_ghz,r0,weight\n405,0.595,2\n")
        assert load_points(path)[1] == [2.0]

    def test_invalid_r0(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("kappa_ghz,r0\n405,1.5\n")
        with pytest.raises(ValidationError) as info:
            load_points(path)
        assert info.value.line == 2


def test_six_significant_digits():
    assert sig6(4473.5712345) == 4473.57
    assert sig6(float("nan")) is None
    assert quantity(1.23456789e-3, "nm") == {"value": 0.00123457, "unit": "nm"}


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\n  oops\n}")
    with pytest.raises(ParseError) as info:
        read_json(path)
    assert info.value.line == 2


def test_spectrum_type_is_shared():
    assert isinstance(load_spectrum(DATA / "overrange.csv"), Spectrum)
