import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lambdadelay.params import (
    AtomParams,
    Calibration,
    CellParams,
    ConfigError,
    FieldParams,
    convert,
    default_params,
    load_config,
    parse_config,
    power_to_rabi,
)
from lambdadelay.resonance import delay_slow_asymptote


def test_defaults():
    p = default_params()
    assert p.cell.density == pytest.approx(4.7e17, rel=1e-12)
    assert p.cell.length == pytest.approx(0.025, rel=1e-12)
    assert p.field.probe_power_fraction == 0.07
    assert p.atom.wavelength == pytest.approx(795e-9, rel=1e-12)


@pytest.mark.parametrize("value, src, dst, expected", [
    (2.5, "kHz", "rad/s", 2 * math.pi * 2500),
    (1.45, "GHz", "rad/s", 2 * math.pi * 1.45e9),
    (4.7e11, "cm^-3", "m^-3", 4.7e17),
    (145, "uW", "W", 145e-6),
    (370, "us", "s", 370e-6),
    (795, "nm", "m", 795e-9),
])
def test_convert_examples(value, src, dst, expected):
    assert convert(value, src, dst) == pytest.approx(expected, rel=1e-15)


def test_convert_rejects_bad_pairs():
    with pytest.raises(ValueError):
        convert(1.0, "Hz", "W")
    with pytest.raises(ValueError):
        convert(1.0, "furlong", "m")


UNIT_PAIRS = [("Hz", "rad/s"), ("kHz", "GHz"), ("uW", "W"), ("cm^-3", "m^-3"), ("us", "s"), ("nm", "m"), ("mW", "uW")]


@given(st.floats(1e-30, 1e30), st.sampled_from(UNIT_PAIRS))
def test_convert_round_trip(x, pair):
    a, b = pair
    assert convert(convert(x, a, b), b, a) == pytest.approx(x, rel=1e-12)


def test_power_to_rabi_examples():
    cal = Calibration(1e9, 1e4)
    assert power_to_rabi(0.0, cal) == 0.0
    assert power_to_rabi(4e-4, cal) / power_to_rabi(1e-4, cal) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(ValueError):
        power_to_rabi(-1e-6, cal)


@given(st.floats(1e-9, 1e-1), st.floats(1.0001, 100.0), st.floats(1e6, 1e11))
def test_power_to_rabi_monotone_half_homogeneous(p, factor, k):
    cal = Calibration(k, 1e4)
    assert power_to_rabi(p * factor, cal) > power_to_rabi(p, cal)
    assert power_to_rabi(p * factor, cal) == pytest.approx(math.sqrt(factor) * power_to_rabi(p, cal), rel=1e-12)


def test_calibrated_power_gives_slow_delay_fixed_point(params, cal):
    # slow-light formula at the calibrated 145 uW point; 370 us within the anchor tolerance
    tau = delay_slow_asymptote(params.at_power(145e-6, cal)).tau
    assert tau == pytest.approx(370e-6, rel=0.10)


def test_parameter_validation():
    with pytest.raises(ValueError):
        AtomParams(795e-9, 1e7, 1e6, 1e3, 1e9)  # gamma < gamma_r/2
    with pytest.raises(ValueError):
        AtomParams(795e-9, 1e7, 1e8, 2e8, 1e9)  # gamma_0 >= gamma
    with pytest.raises(ValueError):
        CellParams(1e17, 0.0)
    with pytest.raises(ValueError):
        FieldParams(Omega=-1.0)
    with pytest.raises(ValueError):
        FieldParams(probe_power_fraction=0.5)
    with pytest.raises(ValueError):
        Calibration(0.0, 1.0)


def test_params_are_immutable():
    p = default_params()
    with pytest.raises(AttributeError):
        p.cell.length = 1.0
    q = p.with_field(Omega=1e6)
    assert p.field.Omega == 0 and q.field.Omega == 1e6


def test_parse_config_roundtrip(tmp_path):
    path = tmp_path / "cell.cfg"
    path.write_text("# cell\nlambda_nm = 780\ncell_length_cm = 5   # longer\nk_rabi = 7e8\n"
                    "total_power_uw = 145\ndelta_one_photon_ghz = 1.45\n")
    cfg = load_config(path)
    assert cfg.params.atom.wavelength == pytest.approx(780e-9)
    assert cfg.params.cell.length == pytest.approx(0.05)
    assert cfg.calibration.k_rabi == 7e8
    assert cfg.total_power == pytest.approx(145e-6)
    assert cfg.Delta == pytest.approx(2 * math.pi * 1.45e9)


@pytest.mark.parametrize("text", [
    "lamda_nm = 795",
    "lambda_nm = 795\nlambda_nm = 780",
    "lambda_nm 795",
    "gamma_hz = fast",
    "cell_length_cm = -1",
    "probe_fraction = 0.9",
])
def test_bad_config_is_hard_error(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/cell.cfg")


def test_empty_config_is_defaults():
    assert parse_config("\n# nothing\n") == {}
    assert load_config(None).params == default_params()


def test_delay_scale_matches_closed_form():
    p = default_params()
    expected = 3 / (8 * math.pi) * 4.7e17 * (795e-9) ** 2 * 0.025 * 2 * math.pi * 5.75e6
    assert p.delay_scale == pytest.approx(expected, rel=1e-12)
    assert np.isfinite(p.atom.omega)
