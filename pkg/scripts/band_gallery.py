#!/usr/bin/env python3
"""Band structures of seeded random periodic potentials before and after gap
opening, with the gap energy used by the hyperbolicity argument marked."""

import argparse
import math
import os

from lyaplab.bases import uniform_stream
from lyaplab.spectral import (PeriodicPotential, bands, discriminant,
                              find_hyperbolic_energy, gap_open_perturb)
from lyaplab import svgplot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=6)
    ap.add_argument("--period", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/band_gallery")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    for k in range(args.count):
        vals = tuple(2.0 * float(u) - 1.0
                     for u in uniform_stream(args.seed + k, 0, args.period))
        pot = PeriodicPotential(vals)
        opened = gap_open_perturb(pot, index=k % args.period, seed=args.seed + 100 + k)
        bs = bands(opened)
        energy = find_hyperbolic_energy(opened)
        svgplot.band_diagram(os.path.join(args.out, f"bands_{k}.svg"), bs.bands,
                             title=f"seed {args.seed + k}: {bs.count} bands, "
                                   f"|t({energy:.3f})| = {abs(discriminant(opened, energy)):.2f}")
        longest = max(b - a for a, b in bs.bands)
        print(f"seed {args.seed + k}: {bs.count} bands, longest {longest:.4f} "
              f"(bound {2 * math.pi / args.period:.4f}), gap energy {energy:+.4f}")
    print(f"wrote {args.count} diagrams under {args.out}/")


if __name__ == "__main__":
    main()
