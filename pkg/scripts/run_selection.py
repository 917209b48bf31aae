"""Projected-data MEMM with and without quality-based data selection."""
import argparse
import logging
import sys

from xlner.experiments import SelectionExperimentConfig, run_selection_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bitext-size", type=int, default=2000)
    ap.add_argument("--noisy-fraction", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", help="write the search grid here")
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)

    cfg = SelectionExperimentConfig(bitext_size=args.bitext_size, noisy_fraction=args.noisy_fraction, seed=args.seed)
    res = run_selection_experiment(cfg)
    th = res.search.thresholds
    print(f"no selection      size {res.projected_size:5d}  test F1 {100 * res.baseline.f1:6.2f}")
    print(f"selected ({th.q}, {th.n})  size {res.selected_size:5d}  test F1 {100 * res.selected.f1:6.2f}")
    print(f"gain {res.gain:+.2f} F1 in {res.seconds:.0f}s")
    if args.grid:
        with open(args.grid, "w") as fh:
            res.search.write(fh)
    else:
        res.search.write(sys.stdout)


if __name__ == "__main__":
    main()
