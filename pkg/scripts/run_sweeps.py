#!/usr/bin/env python3
"""Run the snapshot / separation / mismatch sweeps against a checkpoint.

Each sweep writes a CSV of (sweep_value, estimator, mean_rmspe) next to
--outdir; point the sweeps at a checkpoint from train_reference.py.
"""

import argparse
import pathlib
import sys

from doakit.cli import main as cli

HERE = pathlib.Path(__file__).resolve().parent
SWEEPS = ("snapshot_sweep", "separation_sweep", "mismatch_sweep")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--outdir", default="runs/sweeps")
    ap.add_argument("--only", choices=SWEEPS, default=None)
    args = ap.parse_args()
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in SWEEPS if args.only is None else (args.only,):
        cfg = str(HERE.parent / f"configs/{name}.json")
        csv = str(out / f"{name}.csv")
        rc = cli(["sweep", "--config", cfg, "--checkpoint", args.checkpoint,
                  "--out", csv])
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
