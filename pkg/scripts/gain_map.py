"""Gain of the maximal rescaled QFI over the non-kicked coherent reference across (gamma, N_max)."""
import argparse
from pathlib import Path

import numpy as np

from kicked_mzi.cli import COLUMNS, write_csv
from kicked_mzi.experiments import gain_map


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gammas", type=float, nargs="+", default=[1e-3, 3e-3, 1e-2])
    ap.add_argument("--caps", type=float, nargs="+", default=[100.0, 300.0, 1000.0])
    ap.add_argument("--fine", action="store_true", help="8 x 8 log grid instead of the defaults")
    ap.add_argument("--t-horizon", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/gain_map/gain_map.csv"))
    args = ap.parse_args()
    gammas, caps = args.gammas, args.caps
    if args.fine:
        gammas = list(np.geomspace(1e-4, 1e-1, 8))
        caps = list(np.geomspace(50, 1500, 8))

    cells = gain_map(0.1, 2.0, gammas, caps, args.t_horizon, args.threads)
    write_csv(args.out, COLUMNS["gain-map"],
              [(c.gamma, c.n_cap, c.nmax, c.phi, c.gain, c.t_opt, c.g_kicked, c.t_opt_reference, c.g_reference,
                c.status) for c in cells])
    print("N_max \\ gamma " + " ".join(f"{g:>9.2g}" for g in gammas))
    for i, cap in enumerate(caps):
        row = cells[i * len(gammas):(i + 1) * len(gammas)]
        print(f"{cap:>13.0f} " + " ".join(f"{c.gain:>9.3f}" for c in row))


if __name__ == "__main__":
    main()
