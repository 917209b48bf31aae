"""Co-decoding a high-precision projection-trained tagger with a transfer tagger."""
import argparse
import logging
import sys

from xlner.experiments import CodecodeExperimentConfig, run_codecode_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--miss-rate", type=float, default=0.5)
    ap.add_argument("--target-mono-size", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)

    cfg = CodecodeExperimentConfig(miss_rate=args.miss_rate, target_mono_size=args.target_mono_size, seed=args.seed)
    res = run_codecode_experiment(cfg)
    for name, rep in (("projection", res.projection), ("transfer", res.transfer),
                      ("rank", res.rank), ("confidence", res.confidence)):
        print(f"{name:11s} P {100 * rep.precision:6.2f}  R {100 * rep.recall:6.2f}  F1 {100 * rep.f1:6.2f}")
    print(f"rank over best single system {res.rank_margin:+.2f} F1 in {res.seconds:.0f}s")


if __name__ == "__main__":
    main()
