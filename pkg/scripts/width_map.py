"""Peak width and contrast of p_-1 against coupling rate, then the two inversions."""

import argparse

from optospin.analysis import DEFAULT_OMEGA_GRID, MapContext, contrast_lower_bound, fwhm_vs_omega_map, invert_fwhm
from optospin.errors import NumericalError
from optospin.injection import LockProfile
from optospin.params import TWO_PI

KHZ = TWO_PI * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--width-khz", type=float, default=540.0)
    ap.add_argument("--change", type=float, default=0.10, help="uncorrected p_-1 change for the lower bound")
    args = ap.parse_args()

    maps = {t2: fwhm_vs_omega_map(DEFAULT_OMEGA_GRID, t2, TWO_PI * 182e3, LockProfile()) for t2 in (0.5e-6, 0.8e-6)}
    print(f"{'Omega [kHz]':>11} | {'FWHM 0.5us':>10} {'dp 0.5us':>8} | {'FWHM 0.8us':>10} {'dp 0.8us':>8}")
    a, b = maps[0.5e-6], maps[0.8e-6]
    for k, w in enumerate(a.omega):
        print(f"{w / KHZ:11.0f} | {a.fwhm[k] / KHZ:10.1f} {a.delta_p_minus1[k]:8.4f} | {b.fwhm[k] / KHZ:10.1f} {b.delta_p_minus1[k]:8.4f}")

    ctx = MapContext()
    est = invert_fwhm(KHZ * args.width_khz, ctx)
    print(f"\nFWHM {args.width_khz:.0f} kHz -> Omega/2pi = {est.value / KHZ:.1f} +- {est.uncertainty / KHZ:.1f} kHz")
    try:
        w_min = contrast_lower_bound(args.change, ctx)
        print(f"change {args.change:.2f} at r = 0 -> Omega_min/2pi = {w_min / KHZ:.1f} kHz")
    except NumericalError as e:
        print(f"change {args.change:.2f}: {e}")


if __name__ == "__main__":
    main()
