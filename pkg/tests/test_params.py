import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optospin.errors import ConfigError
from optospin.params import (
    TWO_PI,
    DeviceParams,
    DriveConfig,
    default_config_path,
    derived_rates,
    load_config,
    params_from_values,
    parse_config_text,
    serialize_config,
)


def _default_text():
    return default_config_path().read_text()


def test_default_config_values(device, spin):
    assert device.lambda_o == pytest.approx(1564e-9, rel=1e-15)
    assert device.q_optical == 1.1e5
    assert device.omega_m / TWO_PI == pytest.approx(2.09e9, rel=1e-15)
    assert spin.b_field == pytest.approx(0.0375)
    assert spin.g_str == pytest.approx(19e-3)
    assert spin.hyperfine_offsets[1] == 0.0
    assert spin.hyperfine_splitting / TWO_PI == pytest.approx(4e6)


def test_derived_rates_default(device):
    kappa, gamma_m, resolved = derived_rates(device)
    # oracle: kappa/2pi = c / (lambda Q_o)
    assert kappa / TWO_PI == pytest.approx(1742574157.17275, rel=1e-12)
    assert gamma_m / TWO_PI == pytest.approx(486046.511627907, rel=1e-12)
    assert resolved is True


def test_doubling_q_optical_halves_kappa(device):
    from dataclasses import replace

    k1, _, _ = derived_rates(device)
    k2, _, _ = derived_rates(replace(device, q_optical=2 * device.q_optical))
    assert k2 == k1 / 2


def test_sideband_flag_flips_for_low_q():
    d = DeviceParams(1564e-9, 1e3, TWO_PI * 2.09e9, 4300, TWO_PI * 25e3, 9e-12, 20.8e6, 1e3, 10.2e-3)
    assert derived_rates(d)[2] is False


def _text_without(key):
    return "\n".join(l for l in _default_text().splitlines() if not l.startswith(key))


def test_missing_key(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(_text_without("g_str_hz_per_kpa"))
    with pytest.raises(ConfigError, match="missing key: g_str"):
        load_config(p)


def test_non_positive_value_reports_key_and_line(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(_default_text().replace("q_mech = 4300", "q_mech = 0"))
    with pytest.raises(ConfigError, match=r"non-positive value: q_mech \(.*:\d+\)"):
        load_config(p)


@pytest.mark.parametrize(
    "line, msg",
    [
        ("lambda_o_nm = 1564 kHz", "unparseable unit suffix"),
        ("q_optical = 1.1e5 nm", "unparseable unit suffix"),
        ("lambda_o_nm = abc", "cannot parse"),
        ("bogus_key = 1", "unknown key"),
        ("lambda_o_nm 1564", "expected 'key = value'"),
    ],
)
def test_parse_errors(line, msg):
    text = _text_without(line.split()[0]) + "\n" + line + "\n"
    with pytest.raises(ConfigError, match=msg):
        parse_config_text(text)


def test_unit_suffix_accepted():
    v = parse_config_text("lambda_o_nm = 1564 nm\nt2_star_us = 0.8 µs\nb_field_g = 375 G\n")
    assert v == {"lambda_o_nm": 1564.0, "t2_star_us": 0.8, "b_field_g": 375.0}


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_config_text("eta = 0.3\neta = 0.4\n")


def test_overrides_apply():
    d, _, _ = load_config(overrides={"q_mech": "8600"})
    assert d.q_mech == 8600
    with pytest.raises(ConfigError):
        load_config(overrides={"eta": "1.5"})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.cfg")


def test_gamma_e_default_when_absent():
    base = parse_config_text(_text_without("gamma_e_mhz_per_g"))
    _, sp, _ = params_from_values(base)
    assert sp.gamma_e == pytest.approx(2.8025e10)


def test_roundtrip_default_bit_exact(params):
    text = serialize_config(params.device, params.spin, params.drive)
    again = params_from_values(parse_config_text(text))
    assert again == (params.device, params.spin, params.drive)


_pos = st.floats(min_value=1e-3, max_value=1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=150, deadline=None)
@given(
    lam=_pos, qo=_pos, wm=_pos, g=_pos, eta=st.floats(0, 1), t2=_pos, hf=st.floats(0, 100),
    b=st.floats(0, 5000), inj=st.floats(-1e4, 1e4), tune=_pos,
)
def test_roundtrip_bit_exact(lam, qo, wm, g, eta, t2, hf, b, inj, tune):
    values = parse_config_text(_default_text())
    values.update(
        lambda_o_nm=lam, q_optical=qo, omega_m_ghz=wm, g_om_khz=g, eta=eta, t2_star_us=t2,
        hyperfine_offset_mhz=hf, b_field_g=b, injection_detuning_khz=inj, gamma_tune_khz=tune,
    )
    try:
        first = params_from_values(values)
    except ConfigError:
        return  # e.g. injection tone pushed below zero frequency
    text = serialize_config(*first)
    second = params_from_values(parse_config_text(text))
    assert second == first


@settings(max_examples=200, deadline=None)
@given(
    wm=st.floats(1e8, 1e11), winj=st.floats(1e8, 1e11), ws=st.floats(1e8, 1e11),
)
def test_detuning_identity(wm, winj, ws):
    dc = DriveConfig(omega_inj=winj, omega_m_intrinsic=wm, gamma_tune=1.0, omega_s=ws)
    assert dc.delta_si == ws - winj
    # the two-hop route agrees to the rounding of the large frequencies
    assert abs(dc.delta_si - (dc.delta_sm + dc.delta_mi)) <= 4 * math.ulp(max(wm, winj, ws))
