"""Command line entry point: train from a JSON spec and export weights."""

from __future__ import annotations

import argparse
import sys

from .export import export_bpdm
from .spec import SpecError, load_spec
from .train import TrainingDivergedError, train_denoiser


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="score-trainer",
        description="Train a denoiser MLP from a JSON spec and export "
                    "BPDM weights plus a .vec sidecar and a training log.",
    )
    parser.add_argument("spec", help="path to a JSON TrainSpec")
    parser.add_argument(
        "--out", required=True,
        help="output prefix; writes <out>.bpdm, <out>.vec, <out>_log.csv",
    )
    args = parser.parse_args(argv)

    try:
        spec = load_spec(args.spec)
    except (SpecError, OSError) as err:
        print(f"spec error: {err}", file=sys.stderr)
        return 1
    try:
        weights = train_denoiser(spec, log_path=args.out + "_log.csv")
    except TrainingDivergedError as err:
        print(f"training diverged: {err}", file=sys.stderr)
        return 1
    bpdm_path, vec_path = export_bpdm(weights, args.out)
    print(f"wrote {bpdm_path}, {vec_path}, {args.out}_log.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
