"""NV ground-state |+1> <-> |-1> transition and stress-to-Rabi conversion."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .params import TWO_PI, DeviceParams, SpinParams, zeeman_splitting


@dataclass(frozen=True)
class SpinTransition:
    omega_s: float
    nuclear_projection: int
    rabi_max: float


def spin_splitting(sp: SpinParams, nuclear_projection: int = 0) -> float:
    """Angular |+1> <-> |-1> frequency, 2 * gamma_e * B plus the hyperfine offset."""
    if nuclear_projection not in (-1, 0, 1):
        raise ValueError(f"invalid nuclear projection: {nuclear_projection}")
    return zeeman_splitting(sp) + sp.offset(nuclear_projection)


def rabi_from_stress(p, sp: SpinParams, eta: float | None = None):
    """Angular Rabi rate 2*pi * eta * g_str * p for stress amplitude ``p`` (Pa)."""
    eta = sp.eta if eta is None else eta
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("stress must be non-negative")
    out = TWO_PI * eta * sp.g_str * p
    return float(out) if out.ndim == 0 else out


def stress_from_rabi(omega, sp: SpinParams, eta: float | None = None):
    eta = sp.eta if eta is None else eta
    return np.asarray(omega, dtype=float) / (TWO_PI * eta * sp.g_str)


def transitions(sp: SpinParams, stress: float) -> list[SpinTransition]:
    rabi = rabi_from_stress(stress, sp)
    return [SpinTransition(spin_splitting(sp, m), m, rabi) for m in (-1, 0, 1)]


@dataclass(frozen=True)
class StressMap:
    """Per-phonon stress magnitude versus radius from the disk centre."""

    radius: np.ndarray  # m, strictly increasing
    stress: np.ndarray  # Pa per single-phonon amplitude

    def __post_init__(self):
        r = np.asarray(self.radius, dtype=float)
        s = np.asarray(self.stress, dtype=float)
        if r.ndim != 1 or r.shape != s.shape or r.size < 1:
            raise ValueError("stress map needs matching 1-d radius and stress columns")
        if np.any(np.diff(r) <= 0):
            raise ValueError("stress map radii must be strictly increasing")
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "stress", s)

    @classmethod
    def two_point(cls, p0: float, spot_radius: float, ratio: float) -> "StressMap":
        return cls(np.array([0.0, spot_radius]), np.array([p0, ratio * p0]))

    @classmethod
    def from_params(cls, d: DeviceParams, sp: SpinParams) -> "StressMap":
        return cls.two_point(d.p_single_phonon, sp.spot_radius, sp.spot_stress_ratio)


def load_stress_map(path: str | Path | None = None) -> StressMap:
    """Read a ``radius_um, stress_kpa_per_phonon_amp`` CSV."""
    if path is None:
        path = Path(str(resources.files("optospin") / "data" / "stress_map_default.csv"))
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(row for row in fh if not row.startswith("#")))
    try:
        r = [float(row["radius_um"]) * 1e-6 for row in rows]
        s = [float(row["stress_kpa_per_phonon_amp"]) * 1e3 for row in rows]
    except KeyError as e:
        raise ValueError(f"stress map {path}: missing column {e}") from None
    return StressMap(np.array(r), np.array(s))


def stress_map_lookup(radius: float, smap: StressMap) -> float:
    if not smap.radius[0] <= radius <= smap.radius[-1]:
        raise ValueError(
            f"radius {radius * 1e6:g} um outside stress map domain "
            f"[{smap.radius[0] * 1e6:g}, {smap.radius[-1] * 1e6:g}] um"
        )
    return float(np.interp(radius, smap.radius, smap.stress))


def spot_stress(d: DeviceParams, sp: SpinParams, smap: StressMap | None = None) -> float:
    """Clamped self-oscillation stress at the measurement spot (Pa)."""
    smap = smap or StressMap.from_params(d, sp)
    centre = stress_map_lookup(0.0, smap)
    return d.p_max * stress_map_lookup(sp.spot_radius, smap) / centre
