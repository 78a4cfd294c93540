"""Approximation errors and smallness norms across a decade of energies.

Prints one line per energy and the log-log slopes of the tracked columns.

    python scripts/energy_scan.py --seed 1 --dim 12 --scale 0.1
"""
import argparse


from scatterkit.diagnostics import approximation_error_scan, loglog_slope
from scatterkit.modelspace import EnergyGridSpec, ModelConfig, build_flat_model, energy_grid

COLUMNS = ("norm_TaG0", "norm_TaG1", "norm_KaG2", "born_T", "relerr_impulse", "relerr_uia", "defect_impulse",
           "defect_uia")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--dim", type=int, default=12)
    ap.add_argument("--particles", type=int, default=3)
    ap.add_argument("--scale", type=float, default=0.1)
    ap.add_argument("--eta", type=float, default=0.1, help="eps = eta * Re(z)")
    ap.add_argument("--decades-above", type=float, default=1.0,
                    help="grid starts this many decades above max(width, 10 E_B_min)")
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    sys_ = build_flat_model(ModelConfig(n_particles=args.particles, dim=args.dim, seed=args.seed,
                                        coupling_scale=args.scale))
    probe = approximation_error_scan(sys_, energy_grid(EnergyGridSpec(1.0, 2.0, 2)))
    scale = max(sys_.h0.width, 10 * probe.metadata["e_b_min"])
    lo = scale * 10 ** args.decades_above
    grid = energy_grid(EnergyGridSpec(lo, 10 * lo, args.points, eps_relative=args.eta))
    res = approximation_error_scan(sys_, grid, threads=args.threads)

    print(f"# spectral width {sys_.h0.width:g}, E_B_min {probe.metadata['e_b_min']:.4g}")
    print("re_z " + " ".join(f"{c:>14s}" for c in COLUMNS))
    for r in res.rows:
        v = r.values()
        print(f"{r.e0:8.2f} " + " ".join(f"{v[c]:14.6e}" for c in COLUMNS))
    e = res.column("re_z")
    print("slope    " + " ".join(f"{loglog_slope(e, res.column(c)):14.3f}" for c in COLUMNS))
    print("onset:", {k: v for k, v in res.metadata["regime_onset"].items() if v is not None})


if __name__ == "__main__":
    main()
