"""Cooperativity roadmap from this device to shielded optomechanical crystals."""

import argparse

from optospin.params import ParamSet
from optospin.roadmap import presets, roadmap_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--no-factor4", action="store_true")
    args = ap.parse_args()
    ps = ParamSet.load()
    for row in roadmap_table(presets(ps.device, ps.spin, factor4=not args.no_factor4)):
        extra = f"  [assumed: {', '.join(row['assumed'])}]" if row["assumed"] else ""
        print(f"{row['label']:<46} C_sm = {row['C_sm']:<10.3g} C_om = {row['C_om']:<8.3g}{extra}")


if __name__ == "__main__":
    main()
