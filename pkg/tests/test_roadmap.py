import pytest

from optospin.optomech import cooperativity_om, threshold_photons
from optospin.roadmap import cooperativity_om_entry, cooperativity_sm, presets, roadmap_table


@pytest.fixture
def entries(device, spin):
    return {e.label: e for e in presets(device, spin)}


def test_siv_microdisk(entries):
    assert cooperativity_sm(entries["SiV microdisk"]) == pytest.approx(0.2, rel=1e-12)


def test_factor4_toggle(device, spin):
    plain = {e.label: e for e in presets(device, spin, factor4=False)}
    assert cooperativity_sm(plain["SiV microdisk"]) == pytest.approx(0.05, rel=1e-12)


def test_optomechanical_crystal(entries):
    c = cooperativity_sm(entries["SiV optomechanical crystal"])
    assert c == pytest.approx(125, rel=1e-12)
    assert c > 100


def test_phononic_shield(entries):
    e = entries["SiV optomechanical crystal + phononic shield"]
    assert cooperativity_sm(e) == pytest.approx(5e6, rel=1e-12)
    assert cooperativity_om_entry(e) == pytest.approx(32, rel=1e-12)


def test_current_device(entries, device):
    e = entries["NV microdisk (this device)"]
    assert cooperativity_om_entry(e) == pytest.approx(1.0, rel=1e-12)
    assert cooperativity_om_entry(e) == pytest.approx(cooperativity_om(threshold_photons(device), device), rel=1e-14)
    assert cooperativity_sm(e) < 1e-6


def test_table_rows(device, spin):
    rows = roadmap_table(presets(device, spin))
    assert [r["label"] for r in rows][0] == "NV microdisk (this device)"
    assert all({"C_sm", "C_om", "assumed"} <= set(r) for r in rows)
    assert "kappa/2pi=1 GHz" in rows[2]["assumed"]


def test_rejects_nonpositive(device, spin):
    from dataclasses import replace

    with pytest.raises(ValueError):
        replace(presets(device, spin)[1], gamma_m=0.0)
