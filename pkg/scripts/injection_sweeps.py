"""Spin populations versus injection-tone detuning, near and far from the spin line.

Near case: spin-mechanics detuning 182 kHz, peak drive 168 kHz. Far case:
-769 kHz, where the oscillator is locked only weakly at spin resonance.
"""

import argparse
from pathlib import Path

import numpy as np

from optospin.analysis import DEFAULT_GRID, fwhm_of_curve, invert_fwhm, peak_change
from optospin.csvio import sweep_columns, table_text
from optospin.dynamics import PulseSequence, sweep_injection_detuning
from optospin.errors import CurveError
from optospin.injection import LockProfile
from optospin.params import TWO_PI

KHZ = TWO_PI * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega-khz", type=float, default=168.0)
    ap.add_argument("--t2star-us", type=float, default=0.8)
    ap.add_argument("--outdir", type=Path, default=None, help="write one CSV per case here")
    args = ap.parse_args()

    seq = PulseSequence(t2_star=args.t2star_us * 1e-6)
    lp = LockProfile()
    for name, dsm in (("near", 182.0), ("far", -769.0)):
        res = sweep_injection_detuning(KHZ * dsm, KHZ * args.omega_khz, lp, seq, DEFAULT_GRID)
        try:
            width = fwhm_of_curve(res.delta_si, res.p_minus1)
        except CurveError as e:
            width = None
            print(f"{name}: no clean peak ({e})")
        change = peak_change(res.p_minus1)
        print(f"{name}: delta_sm/2pi = {dsm:+.0f} kHz, peak change in p_-1 = {change:.3f}", end="")
        if width is not None:
            print(f", FWHM/2pi = {width / KHZ:.1f} kHz")
            if name == "near":
                est = invert_fwhm(width)
                print(f"      width inverts back to Omega/2pi = {est.value / KHZ:.1f} +- {est.uncertainty / KHZ:.1f} kHz")
        else:
            print()
        if args.outdir:
            args.outdir.mkdir(parents=True, exist_ok=True)
            out = args.outdir / f"sweep_{name}.csv"
            out.write_text(table_text(sweep_columns(res.with_fwhm(width))))
            print(f"      wrote {out}")
    i = int(np.argmin(np.abs(DEFAULT_GRID)))
    print(f"(grid: {len(DEFAULT_GRID)} points, {DEFAULT_GRID[i + 1] / KHZ - DEFAULT_GRID[i] / KHZ:.0f} kHz spacing)")


if __name__ == "__main__":
    main()
