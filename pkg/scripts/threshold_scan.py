"""Lasing threshold and clamped oscillation amplitude versus input power."""

import argparse

import numpy as np

from optospin.params import ParamSet
from optospin.optomech import clamped_amplitude, cooperativity_om, threshold_dropped_power, threshold_photons
from optospin.params import TWO_PI, derived_rates


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--pmax-mw", type=float, default=60.0)
    args = ap.parse_args()

    d = ParamSet.load(args.config).device
    kappa, gamma_m, resolved = derived_rates(d)
    n_th = threshold_photons(d)
    p_drop = threshold_dropped_power(d)
    print(f"kappa/2pi      {kappa / TWO_PI / 1e9:.4f} GHz  (sideband resolved: {resolved})")
    print(f"gamma_m/2pi    {gamma_m / TWO_PI / 1e3:.1f} kHz")
    print(f"N_th           {n_th:.4g} photons  (C_om = {cooperativity_om(n_th, d):.12f})")
    print(f"P_drop at N_th {p_drop * 1e3:.3f} mW, i.e. {100 * p_drop / d.p_threshold_in:.2f}% of the input threshold")
    print()
    print(f"{'P_in [mW]':>10} {'x [pm]':>8} {'stress [MPa]':>13}")
    for p in np.linspace(0, args.pmax_mw, 13):
        osc = clamped_amplitude(p * 1e-3, d)
        print(f"{p:10.2f} {osc.displacement_amp * 1e12:8.3f} {osc.stress_amp / 1e6:13.3f}")


if __name__ == "__main__":
    main()
