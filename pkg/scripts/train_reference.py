#!/usr/bin/env python3
"""Generate the coherent-pairs dataset and train the reference model.

Roughly 20 minutes on one CPU core; artifacts land in --outdir.
"""

import argparse
import pathlib
import sys

from doakit.cli import main as cli

HERE = pathlib.Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="runs/coherent_pairs")
    ap.add_argument("--config", default=str(HERE.parent / "configs/coherent_pairs.json"))
    ap.add_argument("--seed", type=int, default=0, help="training seed")
    args = ap.parse_args()
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    ds = str(out / "train.bin")
    ck = str(out / "model.ckpt")
    for argv in (
        ["simulate", "--config", args.config, "--out", ds],
        ["train", "--config", args.config, "--dataset", ds, "--out", ck,
         "--seed", str(args.seed)],
    ):
        rc = cli(argv)
        if rc != 0:
            return rc
    print(f"checkpoint: {ck}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
