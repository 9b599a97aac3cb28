"""Generate a noisy sweep with a pedestal background and fit (Omega_m, r) back."""

import argparse
import json

import numpy as np

from optospin.analysis import MapContext, fit_sweep, pedestal_model
from optospin.dynamics import SweepResult
from optospin.params import TWO_PI

KHZ = TWO_PI * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega-khz", type=float, default=168.0)
    ap.add_argument("--r", type=float, default=0.8)
    ap.add_argument("--delta-sm-khz", type=float, default=182.0)
    ap.add_argument("--noise", type=float, default=0.005)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = KHZ * np.arange(-1500.0, 1501.0, 20.0)
    ctx = MapContext(delta_sm=KHZ * args.delta_sm_khz, grid=grid)
    pp, pm = pedestal_model(ctx, KHZ * args.omega_khz, args.r)
    rng = np.random.default_rng(args.seed)
    pp = np.clip(pp + rng.normal(0, args.noise, pp.shape), 0, 1)
    pm = np.clip(pm + rng.normal(0, args.noise, pm.shape), 0, 1 - pp)
    rep = fit_sweep(SweepResult(grid, np.full_like(grid, np.nan), pp, pm), ctx)
    out = rep.to_dict()
    out.pop("model")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
