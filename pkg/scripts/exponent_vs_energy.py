#!/usr/bin/env python3
"""Sweep the energy for a quasiperiodic Schrodinger cocycle and plot the
exponent curve next to the periodic approximant's exact curve."""

import argparse
import math
import os

import numpy as np

from lyaplab.bases import CircleRotation, IntegrationScheme, TrigPolynomial, constant_potential
from lyaplab.cocycles import SchrodingerFamilyEvaluator
from lyaplab.spectral import PeriodicPotential, ids, thouless_lyapunov
from lyaplab import svgplot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=(math.sqrt(5) - 1) / 2)
    ap.add_argument("--coupling", type=float, default=1.0, help="cosine coupling")
    ap.add_argument("--emin", type=float, default=-3.5)
    ap.add_argument("--emax", type=float, default=3.5)
    ap.add_argument("--grid", type=int, default=401)
    ap.add_argument("--n", type=int, default=16384)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/exponent_vs_energy")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    base = CircleRotation(args.alpha)
    pot = TrigPolynomial(cos=(args.coupling,))
    ev = SchrodingerFamilyEvaluator(base, IntegrationScheme(n=args.n, seed=args.seed))
    sup_pot = ev.potential_support(pot)
    sup_one = ev.potential_support(constant_potential(base))
    energies = np.linspace(args.emin, args.emax, args.grid)
    vals, errs = ev.lyapunov_batch(energies[:, None] * sup_one[None, :] - sup_pot[None, :])

    # Thouless curve of the free periodic comparison operator
    free = ids(PeriodicPotential((0.0,)))
    thouless = [thouless_lyapunov(free, float(e)) for e in energies]

    with open(os.path.join(args.out, "exponents.csv"), "w") as fh:
        fh.write("energy,lyapunov,err_proxy,free_thouless\n")
        for e, v, r, t in zip(energies, vals, errs, thouless):
            fh.write(f"{e!r},{v!r},{r!r},{t!r}\n")
    svgplot.line_chart(os.path.join(args.out, "exponents.svg"), list(energies),
                       [("cosine potential", list(vals)), ("free (Thouless)", thouless)],
                       title=f"exponent vs energy, alpha={args.alpha:.6f}, coupling={args.coupling}",
                       xlabel="E", ylabel="L")
    print(f"wrote {args.out}/exponents.csv and exponents.svg")
    print(f"max exponent {vals.max():.4f}; min {vals.min():.2e}")


if __name__ == "__main__":
    main()
