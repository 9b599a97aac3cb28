"""Optomechanical cooperativity, lasing threshold and amplitude clamping."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants

from .params import DeviceParams, derived_rates


@dataclass(frozen=True)
class OscillatorState:
    displacement_amp: float  # m
    stress_amp: float  # Pa
    phonon_number_equivalent: float

    @classmethod
    def from_displacement(cls, x: float, d: DeviceParams) -> "OscillatorState":
        p = stress_from_displacement(x, d)
        return cls(x, p, (p / d.p_single_phonon) ** 2)

    @classmethod
    def maximum(cls, d: DeviceParams) -> "OscillatorState":
        return cls.from_displacement(d.x_max, d)


def cooperativity_om(n_photons: float, d: DeviceParams) -> float:
    """C_om = 4 N g_om^2 / (kappa gamma_m)."""
    if n_photons < 0:
        raise ValueError("photon number must be non-negative")
    kappa, gamma_m, _ = derived_rates(d)
    return 4.0 * n_photons * d.g_om**2 / (kappa * gamma_m)


def threshold_photons(d: DeviceParams) -> float:
    """Intracavity photon number at which C_om reaches 1."""
    kappa, gamma_m, _ = derived_rates(d)
    return kappa * gamma_m / (4.0 * d.g_om**2)


def threshold_dropped_power(d: DeviceParams) -> float:
    """Optical power dissipated in the cavity at threshold occupancy (W).

    Steady state with N_th photons decaying at kappa: P = N_th * hbar*omega_o * kappa.
    """
    return threshold_photons(d) * constants.hbar * d.omega_o * d.kappa


def stress_from_displacement(x: float, d: DeviceParams) -> float:
    if x < 0:
        raise ValueError("displacement amplitude must be non-negative")
    return d.p_max * (x / d.x_max)


def clamped_amplitude(p_in: float, d: DeviceParams) -> OscillatorState:
    """Self-oscillation amplitude for fiber-input power ``p_in`` (W).

    Phenomenological square-root saturation: zero up to threshold, then
    x_max * sqrt(1 - P_th / P), reaching x_max as P -> inf.
    """
    if p_in < 0:
        raise ValueError("input power must be non-negative")
    if p_in <= d.p_threshold_in:
        x = 0.0
    else:
        x = d.x_max * math.sqrt(1.0 - d.p_threshold_in / p_in)
    return OscillatorState.from_displacement(x, d)
