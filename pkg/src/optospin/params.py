"""Physical parameter types, unit conventions and the key-value config format.

Internally every frequency or rate is angular (rad/s), lengths are metres,
stresses pascal, powers watt, fields tesla. Config files, CSV and CLI flags use
ordinary units (Hz-family, nm, MPa, gauss, ...), with the unit spelled in the
key name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import constants

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DeviceParams:
    lambda_o: float  # m
    q_optical: float
    omega_m: float  # rad/s
    q_mech: float
    g_om: float  # rad/s
    x_max: float  # m
    p_max: float  # Pa
    p_single_phonon: float  # Pa
    p_threshold_in: float  # W, fiber input

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v > 0) or not math.isfinite(v):
                raise ConfigError(f"non-positive value: {f.name}")

    @property
    def omega_o(self) -> float:
        return TWO_PI * constants.c / self.lambda_o

    @property
    def kappa(self) -> float:
        return self.omega_o / self.q_optical

    @property
    def gamma_m(self) -> float:
        return self.omega_m / self.q_mech


@dataclass(frozen=True)
class SpinParams:
    gamma_e: float  # Hz/T
    b_field: float  # T
    g_str: float  # Hz/Pa
    eta: float
    t2_star: float  # s
    # transition offsets for nuclear projection m_I = -1, 0, +1 (rad/s)
    hyperfine_offsets: tuple[float, float, float]
    spot_radius: float = 0.7e-6  # m, NV measurement spot from disk centre
    spot_stress_ratio: float = 0.70  # per-phonon stress at the spot relative to centre

    def __post_init__(self):
        if not self.gamma_e > 0:
            raise ConfigError("non-positive value: gamma_e")
        if not self.b_field >= 0:
            raise ConfigError("negative value: b_field")
        if not self.g_str > 0:
            raise ConfigError("non-positive value: g_str")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError("eta must lie in [0, 1]")
        if not self.t2_star > 0:
            raise ConfigError("non-positive value: t2_star")
        if not 0.0 < self.spot_stress_ratio <= 1.0:
            raise ConfigError("spot_stress_ratio must lie in (0, 1]")
        if not self.spot_radius >= 0:
            raise ConfigError("negative value: spot_radius")
        hf = tuple(float(v) for v in self.hyperfine_offsets)
        if len(hf) != 3 or hf[1] != 0.0 or hf[0] != -hf[2] or hf[0] < 0:
            raise ConfigError("hyperfine_offsets must be (+D, 0, -D) with D >= 0")
        object.__setattr__(self, "hyperfine_offsets", hf)

    @classmethod
    def with_hyperfine(cls, splitting: float, **kw) -> "SpinParams":
        return cls(hyperfine_offsets=(splitting, 0.0, -splitting), **kw)

    @property
    def hyperfine_splitting(self) -> float:
        return self.hyperfine_offsets[0]

    def offset(self, nuclear_projection: int) -> float:
        if nuclear_projection not in (-1, 0, 1):
            raise ValueError(f"invalid nuclear projection: {nuclear_projection}")
        return self.hyperfine_offsets[nuclear_projection + 1]


@dataclass(frozen=True)
class DriveConfig:
    omega_inj: float
    omega_m_intrinsic: float
    gamma_tune: float
    omega_s: float
    drive_power_in: float = math.inf  # W; inf means fully clamped amplitude
    tuning_range: float = TWO_PI * 5e6

    def __post_init__(self):
        for name in ("omega_inj", "omega_m_intrinsic", "gamma_tune", "omega_s", "drive_power_in", "tuning_range"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"non-positive value: {name}")

    @property
    def delta_mi(self) -> float:
        return self.omega_m_intrinsic - self.omega_inj

    @property
    def delta_sm(self) -> float:
        return self.omega_s - self.omega_m_intrinsic

    @property
    def delta_si(self) -> float:
        # spin vs. locked oscillation; equals delta_sm + delta_mi up to rounding
        return self.omega_s - self.omega_inj


def derived_rates(d: DeviceParams) -> tuple[float, float, bool]:
    """Return (kappa, gamma_m, sideband_resolved) for a device."""
    kappa = d.kappa
    gamma_m = d.gamma_m
    return kappa, gamma_m, bool(d.omega_m > kappa)


# ---------------------------------------------------------------------------
# config file


@dataclass(frozen=True)
class _Key:
    name: str
    scale: float
    unit: str | None  # accepted trailing unit token (lower-cased)
    required: bool = True
    default: float | None = None
    sign: str = "positive"  # positive | nonnegative | any | unit_interval


_KEYS = [
    _Key("lambda_o_nm", 1e-9, "nm"),
    _Key("q_optical", 1.0, None),
    _Key("omega_m_ghz", TWO_PI * 1e9, "ghz"),
    _Key("q_mech", 1.0, None),
    _Key("g_om_khz", TWO_PI * 1e3, "khz"),
    _Key("x_max_pm", 1e-12, "pm"),
    _Key("p_max_mpa", 1e6, "mpa"),
    _Key("p_single_phonon_kpa", 1e3, "kpa"),
    _Key("p_threshold_mw", 1e-3, "mw"),
    _Key("gamma_e_mhz_per_g", 1e10, "mhz/g", required=False, default=2.8025),
    _Key("b_field_g", 1e-4, "g", sign="nonnegative"),
    _Key("g_str_hz_per_kpa", 1e-3, "hz/kpa"),
    _Key("eta", 1.0, None, sign="unit_interval"),
    _Key("t2_star_us", 1e-6, "us"),
    _Key("hyperfine_offset_mhz", TWO_PI * 1e6, "mhz", sign="nonnegative"),
    _Key("gamma_tune_khz", TWO_PI * 1e3, "khz"),
    # optional knobs
    _Key("spot_radius_um", 1e-6, "um", required=False, default=0.7, sign="nonnegative"),
    _Key("spot_stress_ratio", 1.0, None, required=False, default=0.70, sign="unit_interval"),
    _Key("drive_power_mw", 1e-3, "mw", required=False, default=math.inf),
    _Key("injection_detuning_khz", TWO_PI * 1e3, "khz", required=False, default=0.0, sign="any"),
    _Key("tuning_range_mhz", TWO_PI * 1e6, "mhz", required=False, default=5.0),
]
KEYS = {k.name: k for k in _KEYS}

_UNIT_ALIASES = {"μs": "us", "µs": "us", "μm": "um", "µm": "um", "gauss": "g"}


def default_config_path() -> Path:
    return Path(str(resources.files("optospin") / "data" / "default_device.cfg"))


def parse_config_text(text: str, source: str = "<config>") -> dict[str, float]:
    """Parse ``key = value [unit]`` lines into config-unit floats (no scaling)."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, rhs = (s.strip() for s in line.partition("="))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key: {key}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key: {key}")
        values[key] = _parse_value(KEYS[key], rhs, f"{source}:{lineno}")
    return values


def _parse_value(kdef: _Key, rhs: str, where: str) -> float:
    parts = rhs.split()
    if not parts or len(parts) > 2:
        raise ConfigError(f"{where}: cannot parse value for {kdef.name}: {rhs!r}")
    try:
        v = float(parts[0])
    except ValueError:
        raise ConfigError(f"{where}: cannot parse value for {kdef.name}: {parts[0]!r}") from None
    if math.isnan(v):
        raise ConfigError(f"{where}: NaN value: {kdef.name}")
    if len(parts) == 2:
        unit = parts[1].lower()
        unit = _UNIT_ALIASES.get(unit, unit)
        if kdef.unit is None or unit != kdef.unit:
            raise ConfigError(f"{where}: unparseable unit suffix {parts[1]!r} for {kdef.name}")
    _check_sign(kdef, v, where)
    return v


def _check_sign(kdef: _Key, v: float, where: str) -> None:
    if kdef.sign == "positive" and not v > 0:
        raise ConfigError(f"non-positive value: {kdef.name} ({where})")
    if kdef.sign == "nonnegative" and not v >= 0:
        raise ConfigError(f"negative value: {kdef.name} ({where})")
    if kdef.sign == "unit_interval" and not 0 <= v <= 1:
        raise ConfigError(f"value outside [0, 1]: {kdef.name} ({where})")


def params_from_values(values: dict[str, float], source: str = "<config>"):
    """Build validated (DeviceParams, SpinParams, DriveConfig) from config-unit values."""
    v = {}
    for kdef in _KEYS:
        if kdef.name in values:
            raw = values[kdef.name]
            _check_sign(kdef, raw, source)
        elif kdef.required:
            raise ConfigError(f"missing key: {kdef.name} ({source})")
        else:
            raw = kdef.default
        v[kdef.name] = raw * kdef.scale

    device = DeviceParams(
        lambda_o=v["lambda_o_nm"],
        q_optical=v["q_optical"],
        omega_m=v["omega_m_ghz"],
        q_mech=v["q_mech"],
        g_om=v["g_om_khz"],
        x_max=v["x_max_pm"],
        p_max=v["p_max_mpa"],
        p_single_phonon=v["p_single_phonon_kpa"],
        p_threshold_in=v["p_threshold_mw"],
    )
    spin = SpinParams.with_hyperfine(
        v["hyperfine_offset_mhz"],
        gamma_e=v["gamma_e_mhz_per_g"],
        b_field=v["b_field_g"],
        g_str=v["g_str_hz_per_kpa"],
        eta=v["eta"],
        t2_star=v["t2_star_us"],
        spot_radius=v["spot_radius_um"],
        spot_stress_ratio=v["spot_stress_ratio"],
    )
    drive = DriveConfig(
        omega_inj=device.omega_m - v["injection_detuning_khz"],
        omega_m_intrinsic=device.omega_m,
        gamma_tune=v["gamma_tune_khz"],
        omega_s=zeeman_splitting(spin),
        drive_power_in=v["drive_power_mw"],
        tuning_range=v["tuning_range_mhz"],
    )
    return device, spin, drive


def zeeman_splitting(sp: SpinParams) -> float:
    """|+1> <-> |-1> angular splitting for m_I = 0."""
    return TWO_PI * (2.0 * sp.gamma_e * sp.b_field)


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None):
    """Read a config file and return (DeviceParams, SpinParams, DriveConfig).

    ``overrides`` maps key names to value strings and is applied after the
    file is parsed, e.g. ``{"q_mech": "4300"}``.
    """
    path = Path(path) if path is not None else default_config_path()
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    values = parse_config_text(text, str(path))
    for key, raw in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(f"override: unknown key: {key}")
        values[key] = _parse_value(KEYS[key], str(raw), "override")
    return params_from_values(values, str(path))


def _ulp_search(guess: float, rebuild, target: float, reach: int = 16):
    """Float within ``reach`` ulps of ``guess`` that ``rebuild`` maps exactly onto ``target``."""
    down = up = guess
    for _ in range(reach):
        for cand in (up, down):
            if rebuild(cand) == target:
                return cand
        up = float(np.nextafter(up, math.inf))
        down = float(np.nextafter(down, -math.inf))
    return None


def _exact_inverse(internal: float, scale: float) -> float:
    """Config-unit float x with x * scale == internal, bit for bit."""
    if scale == 1.0 or not math.isfinite(internal):
        return internal / scale
    x = _ulp_search(internal / scale, lambda c: c * scale, internal)
    if x is None:
        raise ValueError(f"{internal!r} is not representable at scale {scale!r}")
    return x


def config_values(device: DeviceParams, spin: SpinParams, drive: DriveConfig) -> dict[str, float]:
    internal = {
        "lambda_o_nm": device.lambda_o,
        "q_optical": device.q_optical,
        "omega_m_ghz": device.omega_m,
        "q_mech": device.q_mech,
        "g_om_khz": device.g_om,
        "x_max_pm": device.x_max,
        "p_max_mpa": device.p_max,
        "p_single_phonon_kpa": device.p_single_phonon,
        "p_threshold_mw": device.p_threshold_in,
        "gamma_e_mhz_per_g": spin.gamma_e,
        "b_field_g": spin.b_field,
        "g_str_hz_per_kpa": spin.g_str,
        "eta": spin.eta,
        "t2_star_us": spin.t2_star,
        "hyperfine_offset_mhz": spin.hyperfine_splitting,
        "gamma_tune_khz": drive.gamma_tune,
        "spot_radius_um": spin.spot_radius,
        "spot_stress_ratio": spin.spot_stress_ratio,
        "drive_power_mw": drive.drive_power_in,
        "tuning_range_mhz": drive.tuning_range,
    }
    out = {k: _exact_inverse(val, KEYS[k].scale) for k, val in internal.items()}
    # omega_inj is rebuilt as omega_m - detuning; only that difference has to survive
    scale = KEYS["injection_detuning_khz"].scale
    x = _ulp_search(drive.delta_mi / scale, lambda c: device.omega_m - c * scale, drive.omega_inj, reach=64)
    if x is None:
        raise ValueError("injection tone is not representable as a config detuning")
    out["injection_detuning_khz"] = x
    return out


def serialize_config(device: DeviceParams, spin: SpinParams, drive: DriveConfig) -> str:
    lines = [f"{k} = {v!r}" for k, v in config_values(device, spin, drive).items()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ParamSet:
    """Convenience bundle of the three parameter records."""

    device: DeviceParams
    spin: SpinParams
    drive: DriveConfig
    source: str = field(default="<default>", compare=False)

    @classmethod
    def load(cls, path=None, overrides=None) -> "ParamSet":
        d, s, dr = load_config(path, overrides)
        return cls(d, s, dr, str(path or default_config_path()))
