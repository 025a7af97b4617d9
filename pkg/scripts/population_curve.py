"""Render the ratio statistic of a noiseless sequence with one change.

    python scripts/population_curve.py --out figure.svg --jump 20
"""

import argparse
import sys

import numpy as np

from tensorcp.detector import PRESETS, DetectorConfig, detect
from tensorcp.mosum import piecewise_mean
from tensorcp.plot import plot_detection
from tensorcp.tensor import TensorSeq


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=1800)
    ap.add_argument("--z", type=int, nargs="+", default=[600])
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--jump", type=float, default=20.0)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="recommended")
    ap.add_argument("--out", default="population_curve.svg")
    args = ap.parse_args(argv)

    means = [np.full(args.p, args.jump * (j % 2)) for j in range(len(args.z) + 1)]
    seq = TensorSeq(piecewise_mean(means, args.z, args.n))
    det = detect(seq, DetectorConfig.preset(args.preset))
    plot_detection(det, args.out, title=f"noiseless, changes at {args.z}")
    print(f"K_hat = {det.k_hat}, locations = {det.locations}; wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
