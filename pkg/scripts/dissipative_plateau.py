"""Dissipative runs: QFI versus time with loss, and the long-time plateau versus phi and versus input."""
import argparse
import math
from pathlib import Path

from kicked_mzi.cli import COLUMNS, write_csv
from kicked_mzi.experiments import TimeConfig, sweep_plateau, sweep_qfi_vs_time

PAIRS = [(0.1, 31778 * math.pi / 1e6), (0.25, 78761 * math.pi / 1e6)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma-tau", type=float, default=0.01)
    ap.add_argument("--t-max", type=int, default=2000)
    ap.add_argument("--t-plateau", type=int, default=4000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-dir", type=Path, default=Path("results/plateau"))
    args = ap.parse_args()
    g = args.gamma_tau

    configs = [TimeConfig(r=r, alpha=2.0, t_max=args.t_max, phi=phi, gamma_tau=g) for r, phi in PAIRS]
    for (r, _), res in zip(PAIRS, sweep_qfi_vs_time(configs, args.threads)):
        recs = res.records()
        write_csv(args.out_dir / f"qfi_vs_time_r{r:g}.csv", COLUMNS["qfi-vs-time"],
                  [(x.x, x.qfi, x.rescaled, x.nmax, x.purity, x.benchmark_cs, x.benchmark_noon, x.reference)
                   for x in recs])
        ref_peak = max(x.reference for x in recs)
        print(f"r={r:g}: N_max={res.nmax:.1f}, QFI(t={args.t_max})={recs[-1].qfi:.4g}, "
              f"reference {recs[-1].reference:.3g} ({recs[-1].reference / ref_peak:.1e} of its peak)")

    def plateau_rows(recs):
        return [(x.phi, x.input_photons, x.nmax, x.qfi, x.benchmark_cs, x.benchmark_noon) for x in recs]

    phis = [k * math.pi / 1000 for k in (35, 34.5, 34, 33.5, 33, 32.5, 32)]
    by_phase = sweep_plateau(0.1, g, phis, [2.0], args.t_plateau, workers=args.threads)
    write_csv(args.out_dir / "plateau_by_phase.csv", COLUMNS["plateau"], plateau_rows(by_phase))
    print("plateau vs phi:", ", ".join(f"N_max {x.nmax:.0f} -> {x.qfi:.3g}" for x in by_phase))

    by_input = sweep_plateau(0.1, g, [PAIRS[0][1]], [float(a) for a in range(7)], args.t_plateau,
                             workers=args.threads)
    write_csv(args.out_dir / "plateau_by_input.csv", COLUMNS["plateau"], plateau_rows(by_input))
    values = [x.qfi for x in by_input]
    print(f"plateau vs alpha 0..6: max/min {max(values) / min(values):.5f}")


if __name__ == "__main__":
    main()
