"""Direct model transfer: identity language and a rotated embedding space."""
import argparse
import logging
import sys
from dataclasses import replace

from xlner.experiments import TransferExperimentConfig, run_transfer_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--architecture", choices=("nn1", "nn2"), default="nn1")
    ap.add_argument("--dictionary-size", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)

    cfg = TransferExperimentConfig(architecture=args.architecture, dictionary_size=args.dictionary_size, seed=args.seed)
    if args.architecture == "nn2":
        cfg = replace(cfg, nn=replace(cfg.nn, learning_rate=0.05))
    res = run_transfer_experiment(cfg)
    print(f"identity language outputs identical: {res.identity_match}")
    print(f"source model   F1 {100 * res.source.f1:6.2f}")
    print(f"transfer       F1 {100 * res.transfer.f1:6.2f}  ({res.dictionary_size} dictionary pairs, "
          f"residual {res.mapping.residual:.2e})")
    print(f"gap {res.gap:.2f} F1 in {res.seconds:.0f}s")


if __name__ == "__main__":
    main()
