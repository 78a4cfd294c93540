"""Grid solver against the closed-form Yamaguchi amplitude.

Tabulates the on-shell error versus node count and cutoff, and the bound
state found by the Birman-Schwinger bisection.

    python scripts/yamaguchi_convergence.py --lam -2 --beta 1
"""
import argparse

import numpy as np

from scatterkit.modelspace import build_yamaguchi_grid
from scatterkit.twobody import binding_energies, grid_ls_solve, yamaguchi_binding_energy, yamaguchi_on_shell_t


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=-2.0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--k-on", type=float, default=0.7)
    ap.add_argument("--cutoffs", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    ap.add_argument("--nodes", type=int, nargs="+", default=[16, 32, 64, 128, 200])
    args = ap.parse_args()

    ana = yamaguchi_on_shell_t(args.lam, args.beta, args.k_on)
    print(f"analytic T(k,k) = {ana:.15g}   Im(1/T) = {(1 / ana).imag:.12g}   pi k / 2 = {np.pi * args.k_on / 2:.12g}")
    print("cutoff   nodes   rel. error")
    for cut in args.cutoffs:
        for n in args.nodes:
            pot, grid = build_yamaguchi_grid(args.beta, args.lam, n, cut, args.k_on)
            t = grid_ls_solve(pot, grid).on_shell_t
            print(f"{cut:7.0e} {n:6d}   {abs(t - ana) / abs(ana):.3e}")
    pot, grid = build_yamaguchi_grid(args.beta, args.lam, max(args.nodes), max(args.cutoffs), args.k_on)
    eb = binding_energies(pot, grid.free_spectrum(), energy_scale=max(1.0, args.beta ** 2))
    print(f"binding energy: grid {eb:.15g}  analytic {yamaguchi_binding_energy(args.lam, args.beta):.15g}")


if __name__ == "__main__":
    main()
