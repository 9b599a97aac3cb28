"""Command-line entry point: ``optospin <subcommand> [options]``.

Exit codes: 0 success, 2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    MapContext,
    contrast_lower_bound,
    fit_sweep,
    fwhm_of_curve,
    fwhm_vs_omega_map,
    invert_fwhm,
    peak_change,
)
from .csvio import read_sweep_csv, sweep_columns, table_text
from .dynamics import PulseSequence, sweep_injection_detuning, sweep_stress
from .errors import ConfigError, CurveError, NumericalError
from .injection import LockProfile, psd_vs_detuning, stress_vs_detuning
from .nvspin import rabi_from_stress, spin_splitting, spot_stress, stress_from_rabi
from .optomech import (
    OscillatorState,
    clamped_amplitude,
    cooperativity_om,
    threshold_dropped_power,
    threshold_photons,
)
from .params import TWO_PI, ParamSet, default_config_path, derived_rates
from .roadmap import presets, roadmap_table

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config_path: str
    overrides: list[str]
    outputs: list[str] = field(default_factory=list)
    tool_version: str = __version__
    timestamp: str = "unset"
    parameters: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _timestamp(stamp: bool) -> str:
    # wall-clock only on request so repeated runs stay byte-identical
    if stamp:
        return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc).isoformat(timespec="seconds")
    return "unset"


# ---------------------------------------------------------------------------
# flag parsing helpers


def parse_range(text: str, name: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(n)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"--{name}: expected start:stop:step or a comma list, got {text!r}") from None


def parse_overrides(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--override expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _khz(v: float) -> float:
    return TWO_PI * 1e3 * v


def _to_khz(w) -> float:
    return w / TWO_PI / 1e3


# ---------------------------------------------------------------------------
# output


def emit(args, manifest: RunManifest, payload, kind: str) -> None:
    """Write a CSV table (dict of columns) or JSON object to --out or stdout."""
    if kind == "csv":
        if args.out:
            manifest_name = Path(args.out).name + ".manifest.json"
            text = table_text(payload, [f"manifest: {manifest_name}"])
        else:
            text = table_text(payload, ["manifest: none (stdout)"])
    else:
        obj = dict(payload)
        if args.out:
            obj["manifest"] = Path(args.out).name + ".manifest.json"
        text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        manifest.outputs = [str(out)]
        Path(str(out) + ".manifest.json").write_text(manifest.to_json())
    else:
        sys.stdout.write(text)


def _fmt_kind(args, default: str) -> str:
    return args.format or default


def _columns_from_rows(rows: list[dict]) -> dict[str, list]:
    keys = list(rows[0])
    return {k: [r[k] for r in rows] for k in keys}


# ---------------------------------------------------------------------------
# subcommands


def cmd_device_report(args, ps: ParamSet, manifest: RunManifest) -> None:
    d = ps.device
    kappa, gamma_m, resolved = derived_rates(d)
    powers = parse_range(args.power_mw, "power-mw") * 1e-3
    table = []
    for p in powers:
        osc = clamped_amplitude(float(p), d)
        table.append(
            {
                "p_in_mw": float(p) * 1e3,
                "displacement_pm": osc.displacement_amp * 1e12,
                "stress_mpa": osc.stress_amp / 1e6,
                "phonon_number_equivalent": osc.phonon_number_equivalent,
            }
        )
    n_th = threshold_photons(d)
    p_drop = threshold_dropped_power(d)
    report = {
        "kappa_ghz": kappa / TWO_PI / 1e9,
        "gamma_m_khz": _to_khz(gamma_m),
        "sideband_resolved": resolved,
        "threshold_photons": n_th,
        "cooperativity_at_threshold": cooperativity_om(n_th, d),
        "threshold_dropped_power_mw": p_drop * 1e3,
        "threshold_fiber_power_mw": d.p_threshold_in * 1e3,
        "implied_dropping_efficiency": p_drop / d.p_threshold_in,
        "max_phonon_number_equivalent": OscillatorState.maximum(d).phonon_number_equivalent,
        "clamped_amplitude": table,
    }
    manifest.results = {k: v for k, v in report.items() if k != "clamped_amplitude"}
    if _fmt_kind(args, "json") == "csv":
        emit(args, manifest, _columns_from_rows(table), "csv")
    else:
        emit(args, manifest, report, "json")


def cmd_lock_profile(args, ps: ParamSet, manifest: RunManifest) -> None:
    if args.steps < 2 or args.delta_max_khz <= args.delta_min_khz:
        raise UsageError("lock-profile needs --steps >= 2 and --delta-max-khz > --delta-min-khz")
    lp = LockProfile.from_drive(ps.drive)
    osc = clamped_amplitude(ps.drive.drive_power_in, ps.device)
    delta = _khz(np.linspace(args.delta_min_khz, args.delta_max_khz, args.steps))
    cols = {
        "delta_mi_khz": list(delta / TWO_PI / 1e3),
        "psd_norm": list(psd_vs_detuning(delta, lp)),
        "stress_mpa": list(stress_vs_detuning(delta, lp, osc) / 1e6),
    }
    manifest.parameters = {"gamma_tune_khz": _to_khz(lp.gamma_tune), "stress_peak_mpa": osc.stress_amp / 1e6}
    if _fmt_kind(args, "csv") == "json":
        emit(args, manifest, cols, "json")
    else:
        emit(args, manifest, cols, "csv")


def cmd_spin_report(args, ps: ParamSet, manifest: RunManifest) -> None:
    sp = ps.spin if args.b_field_g is None else replace(ps.spin, b_field=args.b_field_g * 1e-4)
    lp = LockProfile.from_drive(ps.drive)
    centre = spin_splitting(sp, 0)
    omega_m = ps.device.omega_m
    rows = []
    for m in (-1, 0, 1):
        w = spin_splitting(sp, m)
        rows.append(
            {
                "nuclear_projection": m,
                "omega_s_ghz": w / TWO_PI / 1e9,
                "delta_sm_khz": _to_khz(w - omega_m),
                "offset_from_mI0_mhz": (w - centre) / TWO_PI / 1e6,
                "relative_psd_when_mI0_resonant": psd_vs_detuning(w - centre, lp),
            }
        )
    p_spot = spot_stress(ps.device, sp)
    manifest.parameters = {"b_field_g": sp.b_field * 1e4}
    manifest.results = {
        "rabi_centre_eta1_khz": _to_khz(rabi_from_stress(ps.device.p_max, sp, eta=1.0)),
        "rabi_spot_khz": _to_khz(rabi_from_stress(p_spot, sp)),
        "spot_stress_mpa": p_spot / 1e6,
    }
    if _fmt_kind(args, "csv") == "json":
        emit(args, manifest, {"transitions": rows, **manifest.results}, "json")
    else:
        emit(args, manifest, _columns_from_rows(rows), "csv")


def _sequence(args, ps: ParamSet) -> PulseSequence:
    return PulseSequence(
        drive_duration=args.drive_us * 1e-6,
        t2_star=ps.spin.t2_star if args.t2star_us is None else args.t2star_us * 1e-6,
        pi_pulse_fidelity=args.fidelity,
        dt=args.dt_ns * 1e-9,
        gamma_inj=args.gamma_inj_per_us * 1e6,
    )


def _sweep_output(args, res, manifest: RunManifest) -> None:
    try:
        fwhm = fwhm_of_curve(res.delta_si, res.p_minus1)
    except CurveError:
        fwhm = None
    res = res.with_fwhm(fwhm)
    i = int(np.argmax(res.p_minus1))
    manifest.results = {
        "fwhm_khz": None if fwhm is None else _to_khz(fwhm),
        "delta_p_minus1": peak_change(res.p_minus1),
        "peak_delta_si_khz": _to_khz(res.delta_si[i]),
        "peak_p_minus1": float(res.p_minus1[i]),
    }
    cols = sweep_columns(res)
    if _fmt_kind(args, "csv") == "json":
        emit(args, manifest, {"columns": cols, **manifest.results}, "json")
    else:
        emit(args, manifest, cols, "csv")


def cmd_sweep(args, ps: ParamSet, manifest: RunManifest) -> None:
    seq = _sequence(args, ps)
    lp = LockProfile.from_drive(ps.drive)
    if args.omega_khz is None:
        omega = rabi_from_stress(spot_stress(ps.device, ps.spin), ps.spin)
    else:
        omega = _khz(args.omega_khz)
    grid = _khz(parse_range(args.grid_khz, "grid-khz"))
    delta_sm = _khz(args.delta_sm_khz)
    res = sweep_injection_detuning(
        delta_sm, omega, lp, seq, grid, stress_peak=float(stress_from_rabi(omega, ps.spin))
    )
    manifest.parameters = {
        "delta_sm_khz": args.delta_sm_khz,
        "omega_peak_khz": _to_khz(omega),
        "t2_star_us": seq.t2_star * 1e6,
        "drive_us": args.drive_us,
        "gamma_tune_khz": _to_khz(lp.gamma_tune),
        "grid_khz": args.grid_khz,
        "dt_ns": args.dt_ns,
        "gamma_inj_per_us": args.gamma_inj_per_us,
        "pi_pulse_fidelity": args.fidelity,
        "lock_amplitude_at_compensation": float(np.sqrt(psd_vs_detuning(delta_sm, lp))),
    }
    _sweep_output(args, res, manifest)


def cmd_stress_sweep(args, ps: ParamSet, manifest: RunManifest) -> None:
    seq = _sequence(args, ps)
    stress = parse_range(args.stress_mpa, "stress-mpa") * 1e6
    if np.any(stress < 0):
        raise UsageError("--stress-mpa values must be non-negative")
    res = sweep_stress(stress, _khz(args.delta_si_khz), seq, ps.spin)
    manifest.parameters = {
        "delta_si_khz": args.delta_si_khz,
        "eta": ps.spin.eta,
        "g_str_hz_per_kpa": ps.spin.g_str * 1e3,
        "t2_star_us": seq.t2_star * 1e6,
        "drive_us": args.drive_us,
    }
    manifest.results = {"p_minus1_max": float(np.max(res.p_minus1))}
    cols = sweep_columns(res)
    if _fmt_kind(args, "csv") == "json":
        emit(args, manifest, {"columns": cols, **manifest.results}, "json")
    else:
        emit(args, manifest, cols, "csv")


def _map_context(args, ps: ParamSet, t2_star: float) -> MapContext:
    return MapContext(
        delta_sm=_khz(args.delta_sm_khz),
        t2_star=t2_star,
        lp=LockProfile.from_drive(ps.drive),
        drive_duration=args.drive_us * 1e-6,
        grid=_khz(parse_range(args.grid_khz, "grid-khz")),
    )


def cmd_fwhm_map(args, ps: ParamSet, manifest: RunManifest) -> None:
    omegas_khz = parse_range(args.omega_khz, "omega-khz")
    omegas = _khz(omegas_khz)
    t2s_us = parse_range(args.t2star_us, "t2star-us")
    cols = {"t2_star_us": [], "omega_khz": [], "fwhm_khz": [], "delta_p_minus1": []}
    for t2_us in t2s_us:
        t2 = float(t2_us) * 1e-6
        ctx = _map_context(args, ps, t2)
        m = fwhm_vs_omega_map(omegas, t2, ctx.delta_sm, ctx.lp, ctx)
        for w_khz, (_, f, dp) in zip(omegas_khz, m.rows()):
            cols["t2_star_us"].append(float(t2_us))
            cols["omega_khz"].append(float(w_khz))
            cols["fwhm_khz"].append(_to_khz(f))
            cols["delta_p_minus1"].append(float(dp))
    manifest.parameters = {
        "delta_sm_khz": args.delta_sm_khz,
        "drive_us": args.drive_us,
        "grid_khz": args.grid_khz,
        "omega_khz": args.omega_khz,
        "t2star_us": args.t2star_us,
    }
    ctx = _map_context(args, ps, ps.spin.t2_star if args.context_t2star_us is None else args.context_t2star_us * 1e-6)
    if args.invert_fwhm_khz is not None:
        est = invert_fwhm(_khz(args.invert_fwhm_khz), ctx)
        manifest.results["omega_from_fwhm_khz"] = _to_khz(est.value)
        manifest.results["omega_from_fwhm_err_khz"] = _to_khz(est.uncertainty)
    if args.contrast is not None:
        manifest.results["omega_min_khz"] = _to_khz(contrast_lower_bound(args.contrast, ctx))
    if _fmt_kind(args, "csv") == "json":
        emit(args, manifest, {"columns": cols, **manifest.results}, "json")
    else:
        emit(args, manifest, cols, "csv")


def cmd_fit(args, ps: ParamSet, manifest: RunManifest) -> None:
    try:
        data = read_sweep_csv(args.data)
    except FileNotFoundError:
        raise UsageError(f"data file not found: {args.data}") from None
    except ValueError as e:
        raise UsageError(str(e)) from None
    t2 = ps.spin.t2_star if args.t2star_us is None else args.t2star_us * 1e-6
    ctx = MapContext(
        delta_sm=_khz(args.delta_sm_khz),
        t2_star=t2,
        lp=LockProfile.from_drive(ps.drive),
        drive_duration=args.drive_us * 1e-6,
    )
    report = fit_sweep(data, ctx)
    out = report.to_dict()
    manifest.parameters = {"data": str(args.data), **report.model_snapshot}
    manifest.results = {k: v for k, v in out.items() if k != "model"}
    emit(args, manifest, out, "json")


def cmd_roadmap(args, ps: ParamSet, manifest: RunManifest) -> None:
    rows = roadmap_table(presets(ps.device, ps.spin, factor4=not args.no_factor4))
    convention = "C_sm = 4 g_sm^2/(gamma_m gamma_spin)" if not args.no_factor4 else "C_sm = g_sm^2/(gamma_m gamma_spin)"
    manifest.parameters = {"convention": convention}
    kind = args.format or "table"
    if kind == "json":
        emit(args, manifest, {"convention": convention, "entries": rows}, "json")
    elif kind == "csv":
        cols = _columns_from_rows([{**r, "assumed": ";".join(r["assumed"])} for r in rows])
        emit(args, manifest, cols, "csv")
    else:
        lines = [f"convention: {convention}"]
        lines.append(f"{'label':<46} {'g_sm/2pi kHz':>13} {'C_sm':>11} {'C_om':>11}  assumed")
        for r in rows:
            lines.append(
                f"{r['label']:<46} {r['g_sm_khz']:>13.4g} {r['C_sm']:>11.4g} {r['C_om']:>11.4g}  "
                + (", ".join(r["assumed"]) or "-")
            )
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
            manifest.outputs = [args.out]
            Path(args.out + ".manifest.json").write_text(manifest.to_json())
        else:
            sys.stdout.write(text)


COMMANDS = {
    "device-report": cmd_device_report,
    "lock-profile": cmd_lock_profile,
    "spin-report": cmd_spin_report,
    "sweep": cmd_sweep,
    "stress-sweep": cmd_stress_sweep,
    "fwhm-map": cmd_fwhm_map,
    "fit": cmd_fit,
    "roadmap": cmd_roadmap,
}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="parameter file (default: bundled device)")
    p.add_argument("--override", action="append", default=d([]), metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--out", default=d(None), help="output file; a .manifest.json sidecar is written next to it")
    p.add_argument("--format", choices=("csv", "json"), default=d(None))
    p.add_argument("--stamp", action="store_true", default=d(False), help="record wall-clock time in the manifest")


def _add_sequence_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t2star-us", type=float, default=None, help="default: config t2_star_us")
    p.add_argument("--drive-us", type=float, default=7.0)
    p.add_argument("--dt-ns", type=float, default=1.0)
    p.add_argument("--gamma-inj-per-us", type=float, default=0.0, help="extra dephasing rate")
    p.add_argument("--fidelity", type=float, default=1.0, help="microwave pi-pulse fidelity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optospin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"optospin {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("device-report", help="cooperativity, threshold and clamped amplitude")
    p.add_argument("--power-mw", default="0,5,10.2,12,15,20.4,30,50,100,1000")

    p = sub.add_parser("lock-profile", help="injection-locking PSD and stress versus detuning")
    p.add_argument("--delta-min-khz", type=float, default=-1000.0)
    p.add_argument("--delta-max-khz", type=float, default=1000.0)
    p.add_argument("--steps", type=int, default=201)

    p = sub.add_parser("spin-report", help="hyperfine-resolved |+1> <-> |-1> frequencies")
    p.add_argument("--b-field-g", type=float, default=None)

    p = sub.add_parser("sweep", help="populations versus spin-injection detuning")
    p.add_argument("--delta-sm-khz", type=float, default=182.0)
    p.add_argument("--omega-khz", type=float, default=None, help="peak Rabi rate /2pi; default: spot prediction")
    p.add_argument("--grid-khz", default="-1500:1500:10")
    _add_sequence_flags(p)

    p = sub.add_parser("stress-sweep", help="populations versus stress amplitude at fixed detuning")
    p.add_argument("--stress-mpa", default="0:15:0.5")
    p.add_argument("--delta-si-khz", type=float, default=263.0)
    _add_sequence_flags(p)

    p = sub.add_parser("fwhm-map", help="p_-1 peak width and contrast versus coupling rate")
    p.add_argument("--omega-khz", default="10:400:10")
    p.add_argument("--t2star-us", default="0.5,0.8")
    p.add_argument("--delta-sm-khz", type=float, default=182.0)
    p.add_argument("--drive-us", type=float, default=7.0)
    p.add_argument("--grid-khz", default="-1500:1500:10")
    p.add_argument("--invert-fwhm-khz", type=float, default=None, help="also report Omega for this width")
    p.add_argument("--contrast", type=float, default=None, help="also report Omega_min for this r=0 change")
    p.add_argument("--context-t2star-us", type=float, default=None, help="T2* for the inversions")

    p = sub.add_parser("fit", help="fit (Omega_m, r) to a sweep CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--delta-sm-khz", type=float, default=182.0)
    p.add_argument("--t2star-us", type=float, default=None)
    p.add_argument("--drive-us", type=float, default=7.0)

    p = sub.add_parser("roadmap", help="spin-mechanical and optomechanical cooperativity presets")
    p.add_argument("--no-factor4", action="store_true")

    for sp in sub.choices.values():
        _add_globals(sp, suppress=True)
    return parser


RANGE_FLAGS = ("--grid-khz", "--stress-mpa", "--omega-khz", "--power-mw", "--t2star-us")


def _join_negative_ranges(argv: list[str]) -> list[str]:
    # argparse takes "-1500:1500:10" for an option; bind it to its flag explicitly
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in RANGE_FLAGS and i + 1 < len(argv) and re.match(r"^-[\d.]", argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_join_negative_ranges(argv))
    try:
        overrides = parse_overrides(args.override)
        config = Path(args.config) if args.config else default_config_path()
        if not config.exists():
            raise ConfigError(f"config file not found: {config}")
        ps = ParamSet.load(config, overrides)
        manifest = RunManifest(
            command=args.command,
            config_path=str(args.config) if args.config else "<bundled default_device.cfg>",
            overrides=list(args.override),
            timestamp=_timestamp(args.stamp),
        )
        COMMANDS[args.command](args, ps, manifest)
    except (ConfigError, UsageError) as e:
        print(f"optospin: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"optospin: numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as e:
        print(f"optospin: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
