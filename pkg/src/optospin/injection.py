"""Injection-locked self-oscillation: amplitude versus injection detuning.

Peak PSD of the locked oscillation falls off as a Lorentzian in the
mechanical-injection detuning. Mechanical amplitude (and so stress) is taken
as the square root of the normalized PSD.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .optomech import OscillatorState
from .params import TWO_PI, DriveConfig


class TuningRangeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LockProfile:
    gamma_tune: float = TWO_PI * 380e3  # PSD FWHM, rad/s
    delta_range: float = TWO_PI * 5e6  # demonstrated tuning range, rad/s

    def __post_init__(self):
        if not self.gamma_tune > 0 or not self.delta_range > 0:
            raise ValueError("gamma_tune and delta_range must be positive")

    @classmethod
    def from_drive(cls, drive: DriveConfig) -> "LockProfile":
        return cls(drive.gamma_tune, drive.tuning_range)

    def psd_peak_norm(self, delta_mi):
        return psd_vs_detuning(delta_mi, self, warn=False)


def psd_vs_detuning(delta_mi, lp: LockProfile, warn: bool = True):
    """Normalized peak PSD, 1 / (1 + (2 delta / gamma_tune)^2). Accepts arrays."""
    d = np.asarray(delta_mi, dtype=float)
    if warn and np.any(np.abs(d) > lp.delta_range):
        warnings.warn(
            f"detuning outside demonstrated ±{lp.delta_range / TWO_PI / 1e6:g} MHz tuning range",
            TuningRangeWarning,
            stacklevel=2,
        )
    out = 1.0 / (1.0 + (2.0 * d / lp.gamma_tune) ** 2)
    return float(out) if out.ndim == 0 else out


def relative_amplitude(delta_mi, lp: LockProfile, warn: bool = True):
    """Locked amplitude relative to its value at zero detuning."""
    return np.sqrt(psd_vs_detuning(delta_mi, lp, warn=warn))


def stress_vs_detuning(delta_mi, lp: LockProfile, osc: OscillatorState, warn: bool = True):
    if osc.stress_amp < 0:
        raise ValueError("stress amplitude must be non-negative")
    return osc.stress_amp * relative_amplitude(delta_mi, lp, warn=warn)
