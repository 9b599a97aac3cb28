import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optospin.injection import LockProfile, TuningRangeWarning, psd_vs_detuning, stress_vs_detuning
from optospin.optomech import OscillatorState
from optospin.params import TWO_PI

LP = LockProfile()


def test_psd_anchors():
    assert psd_vs_detuning(0.0, LP) == 1.0
    assert psd_vs_detuning(LP.gamma_tune / 2, LP) == 0.5
    assert psd_vs_detuning(-LP.gamma_tune / 2, LP) == 0.5
    assert psd_vs_detuning(TWO_PI * 190e3, LP) == pytest.approx(0.5, rel=1e-15)
    assert psd_vs_detuning(TWO_PI * 5e6, LP) == pytest.approx(1.4419178705948612e-3, rel=1e-12)


def test_out_of_range_warns_but_returns():
    with pytest.warns(TuningRangeWarning, match="5 MHz"):
        v = psd_vs_detuning(TWO_PI * 6e6, LP)
    assert 0 < v < 1.5e-3
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        psd_vs_detuning(TWO_PI * 5e6, LP)


def test_stress_vs_detuning(device):
    osc = OscillatorState.maximum(device)
    assert stress_vs_detuning(0.0, LP, osc) == pytest.approx(20.8e6, rel=1e-12)
    assert stress_vs_detuning(LP.gamma_tune / 2, LP, osc) == pytest.approx(20.8e6 / np.sqrt(2), rel=1e-12)
    zero = OscillatorState(0.0, 0.0, 0.0)
    assert np.all(stress_vs_detuning(np.linspace(-1e7, 1e7, 11), LP, zero) == 0)


def test_hyperfine_neighbours_see_little_drive():
    assert psd_vs_detuning(TWO_PI * 4e6, LP) == pytest.approx(0.0022511707958917685, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(-TWO_PI * 5e6, TWO_PI * 5e6), st.floats(-TWO_PI * 5e6, TWO_PI * 5e6))
def test_stress_even_decreasing_sqrt(d1, d2):
    osc = OscillatorState(9e-12, 20.8e6, 4.3e8)
    s1 = stress_vs_detuning(d1, LP, osc)
    assert s1 == stress_vs_detuning(-d1, LP, osc)
    if abs(d1) < abs(d2):
        assert s1 >= stress_vs_detuning(d2, LP, osc)
    assert (s1 / osc.stress_amp) ** 2 == pytest.approx(psd_vs_detuning(d1, LP), rel=1e-12)
    assert s1 <= stress_vs_detuning(0.0, LP, osc)
