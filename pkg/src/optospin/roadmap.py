"""Spin-mechanical and optomechanical cooperativities for device presets."""

from __future__ import annotations

from dataclasses import dataclass, field

from .optomech import threshold_photons
from .params import TWO_PI, DeviceParams, SpinParams


@dataclass(frozen=True)
class RoadmapEntry:
    label: str
    g_sm: float  # rad/s
    gamma_spin: float
    gamma_m: float
    g_om: float
    kappa: float
    n_photons: float
    convention_factor4: bool = True
    assumed: tuple[str, ...] = field(default=())  # names of inputs not taken from measurement

    def __post_init__(self):
        for name in ("g_sm", "gamma_spin", "gamma_m", "g_om", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{self.label}: {name} must be positive")
        if self.n_photons < 0:
            raise ValueError(f"{self.label}: n_photons must be non-negative")


def cooperativity_sm(e: RoadmapEntry) -> float:
    """g_sm^2 / (gamma_m gamma_spin), times 4 under the factor-4 convention."""
    c = e.g_sm**2 / (e.gamma_m * e.gamma_spin)
    return 4.0 * c if e.convention_factor4 else c


def cooperativity_om_entry(e: RoadmapEntry) -> float:
    return 4.0 * e.n_photons * e.g_om**2 / (e.kappa * e.gamma_m)


def _khz(v):
    return TWO_PI * 1e3 * v


def current_device_entry(d: DeviceParams, sp: SpinParams, factor4: bool = True) -> RoadmapEntry:
    """This NV microdisk: single-phonon stress at the disk centre, T2*-limited linewidth."""
    return RoadmapEntry(
        label="NV microdisk (this device)",
        g_sm=TWO_PI * sp.g_str * d.p_single_phonon,
        gamma_spin=2.0 / sp.t2_star,
        gamma_m=d.gamma_m,
        g_om=d.g_om,
        kappa=d.kappa,
        n_photons=threshold_photons(d),
        convention_factor4=factor4,
        assumed=("n_photons=N_th",),
    )


def presets(d: DeviceParams, sp: SpinParams, factor4: bool = True) -> list[RoadmapEntry]:
    siv_microdisk = RoadmapEntry(
        label="SiV microdisk",
        g_sm=_khz(100),
        gamma_spin=_khz(1000),
        gamma_m=_khz(200),
        g_om=d.g_om,
        kappa=d.kappa,
        n_photons=1.0,
        convention_factor4=factor4,
        assumed=("n_photons=1",),
    )
    omc = RoadmapEntry(
        label="SiV optomechanical crystal",
        g_sm=_khz(2500),
        gamma_spin=_khz(1000),
        gamma_m=_khz(200),
        g_om=_khz(200),
        kappa=_khz(1e6),
        n_photons=1.0,
        convention_factor4=factor4,
        assumed=("kappa/2pi=1 GHz", "n_photons=1"),
    )
    # phononic shield: Q_m = 1e9 at an assumed 5 GHz mode
    shielded = RoadmapEntry(
        label="SiV optomechanical crystal + phononic shield",
        g_sm=_khz(2500),
        gamma_spin=_khz(1000),
        gamma_m=TWO_PI * 5e9 / 1e9,
        g_om=_khz(200),
        kappa=_khz(1e6),
        n_photons=1.0,
        convention_factor4=factor4,
        assumed=("kappa/2pi=1 GHz", "omega_m/2pi=5 GHz", "Q_m=1e9", "n_photons=1"),
    )
    return [current_device_entry(d, sp, factor4), siv_microdisk, omc, shielded]


def roadmap_table(entries: list[RoadmapEntry]) -> list[dict]:
    rows = []
    for e in entries:
        rows.append(
            {
                "label": e.label,
                "g_sm_khz": e.g_sm / TWO_PI / 1e3,
                "gamma_spin_khz": e.gamma_spin / TWO_PI / 1e3,
                "gamma_m_khz": e.gamma_m / TWO_PI / 1e3,
                "g_om_khz": e.g_om / TWO_PI / 1e3,
                "kappa_mhz": e.kappa / TWO_PI / 1e6,
                "n_photons": e.n_photons,
                "C_sm": cooperativity_sm(e),
                "C_om": cooperativity_om_entry(e),
                "factor4": e.convention_factor4,
                "assumed": list(e.assumed),
            }
        )
    return rows
