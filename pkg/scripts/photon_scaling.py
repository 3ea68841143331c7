"""QFI versus achieved N_max: raising the input amplitude (fixed phi) and moving phi toward the critical value."""
import argparse
import math
from pathlib import Path

import numpy as np

from kicked_mzi.cli import COLUMNS, write_csv
from kicked_mzi.experiments import scaling_fit, sweep_qfi_vs_nmax_by_input, sweep_qfi_vs_nmax_by_phase


def rows(recs):
    return [(x.nmax, x.input_photons, x.phi, x.qfi, x.rescaled, x.purity, x.benchmark_cs, x.benchmark_noon)
            for x in recs]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=float, default=0.1)
    ap.add_argument("--n-inputs", type=int, default=25, help="input photon numbers 0..n")
    ap.add_argument("--tail-from", type=int, default=10, help="first input photon number of the fitted tail")
    ap.add_argument("--n-phases", type=int, default=15)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-dir", type=Path, default=Path("results/scaling"))
    args = ap.parse_args()

    alphas = [math.sqrt(n) for n in range(args.n_inputs + 1)]
    by_input = sweep_qfi_vs_nmax_by_input(args.r, 32213 * math.pi / 1e6, 1000, alphas, args.threads)
    write_csv(args.out_dir / "nmax_by_input.csv", COLUMNS["qfi-vs-nmax-input"], rows(by_input))
    fit = scaling_fit(by_input[args.tail_from:])
    ratios = [x.qfi / x.benchmark_cs for x in by_input]
    print(f"input sweep: tail slope {fit.slope:.3f} (r2 {fit.r2:.6f}), "
          f"qfi/coherent from {min(ratios):.1f} to {max(ratios):.1f}")

    phis = np.linspace(34 * math.pi / 1000, 318 * math.pi / 10_000, args.n_phases)
    by_phase = sweep_qfi_vs_nmax_by_phase(args.r, 2000, 0.0, phis, args.threads)
    write_csv(args.out_dir / "nmax_by_phase.csv", COLUMNS["qfi-vs-nmax-phase"], rows(by_phase))
    fit = scaling_fit(by_phase)
    noon = [x.qfi / x.benchmark_noon for x in by_phase]
    print(f"phase sweep: slope {fit.slope:.3f} (r2 {fit.r2:.6f}), N_max {by_phase[0].nmax:.0f}..{by_phase[-1].nmax:.0f}, "
          f"qfi/noon from {min(noon):.2f} to {max(noon):.2f}")


if __name__ == "__main__":
    main()
